#pragma once
// Content-addressed store for generated variants.  Image variants are PNG
// files named sha256(source hash + parameters).png; text variants are kept
// in memory under the same kind of key.

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>

#include "flexdoc/content/raster.hpp"
#include "flexdoc/content/text.hpp"

namespace flexdoc::content {

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
    throw ContentError("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

/// Key for a variant of `source_hash` produced with `params`.
inline std::string variant_key(std::string_view source_hash, std::string_view params) {
  std::string s(source_hash);
  s += '\n';
  s += params;
  return sha256_hex(s);
}

struct StoredImage {
  std::string path;  // absolute file path
  std::string hash;  // sha256 of the PNG bytes
  int width = 0;
  int height = 0;
};

/// Safe for concurrent lookups and inserts.
class VariantCache {
 public:
  explicit VariantCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error("cannot create cache directory " + dir_.string() + ": " + ec.message());
    dir_ = std::filesystem::absolute(dir_);
  }

  const std::filesystem::path& directory() const { return dir_; }

  std::optional<StoredImage> find_image(const std::string& key) const {
    {
      std::shared_lock lock(mu_);
      if (auto it = images_.find(key); it != images_.end()) return it->second;
    }
    // A file left by an earlier process is reused.
    const auto path = dir_ / (key + ".png");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Raster r;
    try {
      r = decode_png(bytes);
    } catch (const ContentError&) {
      return std::nullopt;
    }
    StoredImage s{path.string(), sha256_hex(bytes), r.width, r.height};
    std::unique_lock lock(mu_);
    images_.emplace(key, s);
    by_hash_.emplace(s.hash, s.path);
    return s;
  }

  StoredImage store_image(const std::string& key, const Raster& r) {
    const std::string bytes = encode_png(r);
    const auto path = dir_ / (key + ".png");
    // Write to a temporary name and rename, so readers never see a partial file.
    const auto tmp = dir_ / (key + ".png.tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
        throw Error("cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("cannot write " + path.string() + ": " + ec.message());
    StoredImage s{path.string(), sha256_hex(bytes), r.width, r.height};
    std::unique_lock lock(mu_);
    images_[key] = s;
    by_hash_[s.hash] = s.path;
    return s;
  }

  /// Path of a stored file with the given content hash.
  std::optional<std::string> path_for_hash(const std::string& hash) const {
    std::shared_lock lock(mu_);
    if (auto it = by_hash_.find(hash); it != by_hash_.end()) return it->second;
    return std::nullopt;
  }

  std::optional<TextVariant> find_text(const std::string& key) const {
    std::shared_lock lock(mu_);
    if (auto it = texts_.find(key); it != texts_.end()) return it->second;
    return std::nullopt;
  }

  void store_text(const std::string& key, TextVariant v) {
    std::unique_lock lock(mu_);
    texts_[key] = std::move(v);
  }

 private:
  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
  mutable std::map<std::string, StoredImage> images_;
  mutable std::map<std::string, std::string> by_hash_;
  std::map<std::string, TextVariant> texts_;
};

}  // namespace flexdoc::content
