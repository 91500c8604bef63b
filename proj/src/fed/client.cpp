#include "fedboost/fed/client.hpp"

#include "fedboost/fed/transport.hpp"
#include "fedboost/gbt/train.hpp"

namespace fedboost::fed {

ClientUpdate client_round(const ClientContext& ctx, std::int64_t round,
                          std::string_view global_model_bytes, gbt::kernels::ExecMode mode) {
  const gbt::Ensemble global = gbt::deserialize(global_model_bytes);

  ClientUpdate update;
  update.client_id = ctx.client_id;
  update.round = round;
  update.eval_report = metrics::evaluate(global, ctx.test, mode);
  update.trees = gbt::train_local(global, ctx.train, ctx.config, mode);
  update.train_sample_count = static_cast<std::int64_t>(ctx.train.size());
  return update;
}

void run_tcp_client(const std::string& host, std::uint16_t port, const ClientContext& ctx,
                    gbt::kernels::ExecMode mode) {
  Socket socket = Socket::connect(host, port);
  socket.send_frame(encode_message(Message{0, HelloBody{ctx.client_id}}));

  for (;;) {
    const auto frame = socket.try_recv_frame();
    if (!frame) return;  // server closed after the last round_done
    const Message message = decode_message(*frame);

    if (const auto* body = std::get_if<GlobalModelBody>(&message.body)) {
      // Bytes of the embedded model document; identical to the server-side
      // serialization because both dumps are deterministic.
      const std::string model_bytes = gbt::ensemble_to_json(body->model).dump();
      ClientUpdate update = client_round(ctx, message.round, model_bytes, mode);
      socket.send_frame(encode_message(Message{message.round, ClientUpdateBody{std::move(update)}}));
    } else if (std::holds_alternative<RoundDoneBody>(message.body)) {
      log_debug("client " + std::to_string(ctx.client_id) + ": round " +
                std::to_string(message.round) + " done");
    } else if (const auto* err = std::get_if<ErrorBody>(&message.body)) {
      throw ProtocolError(ProtocolCode::remote_error,
                          "server error [" + err->code + "]: " + err->detail);
    } else {
      throw ProtocolError(ProtocolCode::bad_message_type,
                          "client received unexpected '" + msg_type_name(message) + "'");
    }
  }
}

}  // namespace fedboost::fed
