#include "fidkit/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "fidkit/errors.hpp"
#include "fidkit/version.hpp"
#include "json.hpp"

namespace fidkit {

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open '" + path + "' for hashing");

  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw_internal("EVP_MD_CTX_new failed");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);

  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize n = in.gcount();
    if (n > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(n));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);

  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    char b[3];
    std::snprintf(b, sizeof(b), "%02x", digest[i]);
    hex += b;
  }
  return hex;
}

std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunManifest::write(const std::string& out_dir) const {
  nlohmann::json j = {
      {"command", command},
      {"settings", settings_json.empty() ? nlohmann::json(nullptr)
                                         : nlohmann::json::parse(settings_json)},
      {"weight_file", weight_file},
      {"weight_sha256", weight_sha256},
      {"dataset_file", dataset_file},
      {"dataset_sha256", dataset_sha256},
      {"started_at", started_at},
      {"finished_at", finished_at},
      {"tool_version", tool_version.empty() ? kVersion : tool_version},
  };
  const auto path = std::filesystem::path(out_dir) / "manifest.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_io("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

}  // namespace fidkit
