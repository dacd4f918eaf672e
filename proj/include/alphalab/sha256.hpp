#ifndef ALPHALAB_SHA256_HPP
#define ALPHALAB_SHA256_HPP

#include <array>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "alphalab/error.hpp"

namespace alphalab {

/// Lower-case hex SHA-256 of `data`.
inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 0xf];
  }
  return out;
}

}  // namespace alphalab

#endif  // ALPHALAB_SHA256_HPP
