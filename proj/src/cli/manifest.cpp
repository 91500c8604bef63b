#include "fedboost/cli/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>

#include "fedboost/common.hpp"

namespace fedboost::cli {

namespace {

std::string to_hex(const unsigned char* digest, std::size_t size) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(size * 2);
  for (std::size_t i = 0; i < size; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      throw Error("sha256 init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  void update(const void* data, std::size_t size) {
    if (EVP_DigestUpdate(ctx_, data, size) != 1) throw Error("sha256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int size = 0;
    if (EVP_DigestFinal_ex(ctx_, digest.data(), &size) != 1) throw Error("sha256 final failed");
    return to_hex(digest.data(), size);
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot hash missing file '" + path.string() + "'");
  Sha256 h;
  std::array<char, 1 << 16> buffer;
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    h.update(buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

nlohmann::ordered_json manifest_to_json(const Manifest& manifest) {
  nlohmann::ordered_json j;
  j["experiment_name"] = manifest.experiment_name;
  j["config_sha256"] = manifest.config_sha256;
  j["data_source"] = manifest.data_source;
  j["seeds"] = manifest.seeds;
  j["tool_version"] = manifest.tool_version;
  j["model_schema_version"] = manifest.model_schema_version;
  j["protocol_version"] = manifest.protocol_version;
  j["equivalence_mode"] = manifest.equivalence_mode;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& entry : manifest.files) {
    nlohmann::ordered_json f;
    f["path"] = entry.path;
    f["sha256"] = entry.sha256;
    files.push_back(std::move(f));
  }
  j["files"] = std::move(files);
  return j;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest '" + path.string() + "'");
  out << manifest_to_json(manifest).dump(2) << '\n';
  if (!out) throw Error("manifest write failed");
}

}  // namespace fedboost::cli
