/*
 * Copyright 2026 The accessfl-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef ACCESSFL_CRYPTO_HPP_
#define ACCESSFL_CRYPTO_HPP_

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "accessfl/bignum.hpp"
#include "accessfl/common.hpp"

namespace accessfl {
namespace crypto {

// ---------------------------------------------------------------------------
// Key agreement over a modular group.
// ---------------------------------------------------------------------------

struct DhParams {
  Bignum prime_p;
  Bignum generator_g;
  int key_size_bits = 0;

  // Byte width of fixed-width binary encodings of group elements.
  size_t element_width() const { return (bit_length(prime_p) + 7) / 8; }
};

// 2048-bit MODP group (RFC 3526, group 14). The generator is 2 and the
// modulus is a safe prime.
inline const char* kModp2048Hex =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

// Supported key sizes: the 5-bit toy group used by the test profile and the
// published 2048-bit group used for realism runs. Anything else is a
// configuration error.
inline const DhParams& param_gen(int key_size_bits) {
  static const DhParams kTest{Bignum(23), Bignum(5), 5};
  static const DhParams kProd{from_hex(kModp2048Hex), Bignum(2), 2048};
  switch (key_size_bits) {
    case 5:
      return kTest;
    case 2048:
      return kProd;
    default:
      throw ConfigError("unsupported key size: " +
                        std::to_string(key_size_bits));
  }
}

struct KeyPair {
  Bignum private_key;  // never serialized into protocol messages
  Bignum public_key;
};

struct SharedSecret {
  Bignum value;
  Bytes byte_encoding;  // fixed-width big-endian, width = group element width
};

// ---------------------------------------------------------------------------
// Deterministic keystream (block cipher in counter mode).
// ---------------------------------------------------------------------------

namespace detail {

inline Bytes sha256(std::span<const uint8_t> data) {
  Bytes out(SHA256_DIGEST_LENGTH);
  SHA256(data.data(), data.size(), out.data());
  return out;
}

// Cipher key for a stream: hash of (len(seed) || seed || label), truncated
// to 128 bits. The length prefix keeps (seed, label) framing unambiguous.
inline Bytes stream_key(std::span<const uint8_t> seed,
                        const std::string& label) {
  Bytes buf;
  put_be32(buf, static_cast<uint32_t>(seed.size()));
  buf.insert(buf.end(), seed.begin(), seed.end());
  buf.insert(buf.end(), label.begin(), label.end());
  Bytes digest = sha256(buf);
  digest.resize(16);
  return digest;
}

struct EvpCtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using EvpCtx = std::unique_ptr<EVP_CIPHER_CTX, EvpCtxDeleter>;

}  // namespace detail

// Incremental AES-128-CTR keystream, counter starting at zero. Also serves
// as the project's deterministic RNG: every randomized choice is drawn from
// a labelled stream so runs replay exactly.
class SeededStream {
 public:
  SeededStream(std::span<const uint8_t> seed, const std::string& label)
      : ctx_(EVP_CIPHER_CTX_new()) {
    Bytes key = detail::stream_key(seed, label);
    Bytes iv(16, 0);
    if (EVP_EncryptInit_ex(ctx_.get(), EVP_aes_128_ctr(), nullptr, key.data(),
                           iv.data()) != 1) {
      throw Error("cipher init failed");
    }
  }

  SeededStream(const Bytes& seed, const std::string& label)
      : SeededStream(std::span<const uint8_t>(seed.data(), seed.size()),
                     label) {}

  void next_bytes(std::span<uint8_t> out) {
    static const Bytes kZeros(4096, 0);
    size_t off = 0;
    while (off < out.size()) {
      size_t chunk = std::min(out.size() - off, kZeros.size());
      int len = 0;
      if (EVP_EncryptUpdate(ctx_.get(), out.data() + off, &len, kZeros.data(),
                            static_cast<int>(chunk)) != 1) {
        throw Error("cipher update failed");
      }
      off += static_cast<size_t>(len);
    }
  }

  Bytes next_bytes(size_t n) {
    Bytes out(n);
    next_bytes(std::span<uint8_t>(out.data(), out.size()));
    return out;
  }

  uint32_t next_u32() {
    uint8_t b[4];
    next_bytes(std::span<uint8_t>(b, 4));
    return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) |
           (uint32_t{b[2]} << 8) | uint32_t{b[3]};
  }

  uint64_t next_u64() {
    return (uint64_t{next_u32()} << 32) | uint64_t{next_u32()};
  }

  // Unbiased draw from [0, bound) by top-byte masking plus rejection.
  Bignum next_below(const Bignum& bound) {
    if (bound <= 0) throw DomainError("bound must be positive");
    size_t bits = bit_length(bound - 1);
    size_t width = (bits + 7) / 8;
    if (bound == 1) return Bignum(0);
    uint8_t mask = static_cast<uint8_t>(0xFF >> (8 * width - bits));
    for (;;) {
      Bytes raw = next_bytes(width);
      raw[0] &= mask;
      Bignum candidate = from_bytes_be(raw);
      if (candidate < bound) return candidate;
    }
  }

 private:
  detail::EvpCtx ctx_;
};

// Expands (seed, stream_label) into `length` elements mod 2^32: successive
// 4-byte big-endian words of the keystream. Prefix-consistent in `length`.
inline std::vector<uint32_t> prg_expand(std::span<const uint8_t> seed,
                                        size_t length,
                                        const std::string& stream_label,
                                        OpCounters* counters = nullptr) {
  if (length < 1) throw DomainError("prg_expand needs length >= 1");
  if (counters != nullptr) counters->prg_blocks += (4 * length + 15) / 16;
  SeededStream stream(seed, stream_label);
  Bytes raw = stream.next_bytes(4 * length);
  std::vector<uint32_t> out(length);
  const uint8_t* p = raw.data();
  for (size_t i = 0; i < length; ++i, p += 4) {
    out[i] = (uint32_t{p[0]} << 24) | (uint32_t{p[1]} << 16) |
             (uint32_t{p[2]} << 8) | uint32_t{p[3]};
  }
  return out;
}

inline std::vector<uint32_t> prg_expand(const Bytes& seed, size_t length,
                                        const std::string& stream_label,
                                        OpCounters* counters = nullptr) {
  return prg_expand(std::span<const uint8_t>(seed.data(), seed.size()), length,
                    stream_label, counters);
}

// ---------------------------------------------------------------------------
// Key generation and agreement.
// ---------------------------------------------------------------------------

inline KeyPair key_gen(const DhParams& params, const Bytes& rng_seed,
                       OpCounters* counters = nullptr) {
  SeededStream stream(rng_seed, "dh-keygen");
  // Uniform in [1, p-1].
  Bignum sk = stream.next_below(params.prime_p - 1) + 1;
  return KeyPair{sk, modexp(params.generator_g, sk, params.prime_p, counters)};
}

inline SharedSecret key_agree(const Bignum& own_private,
                              const Bignum& peer_public,
                              const DhParams& params,
                              OpCounters* counters = nullptr) {
  if (peer_public < 1 || peer_public > params.prime_p - 1) {
    throw InvalidKeyError("peer public key outside [1, p-1]");
  }
  if (own_private < 1 || own_private > params.prime_p - 1) {
    throw InvalidKeyError("private key outside [1, p-1]");
  }
  Bignum value = modexp(peer_public, own_private, params.prime_p, counters);
  return SharedSecret{value, to_bytes_be(value, params.element_width())};
}

// ---------------------------------------------------------------------------
// Mask stream labels.
// ---------------------------------------------------------------------------

// Strict mode derives a pair's mask stream from the pair identity alone, so
// the same two peers produce the same mask in every round. Salted mode mixes
// the round number into the label, refreshing masks each round.
enum class PrgProfile { kStrictPaper, kRoundSalted };

inline std::string pair_mask_label(uint32_t id_a, uint32_t id_b,
                                   uint32_t round, PrgProfile profile) {
  uint32_t lo = std::min(id_a, id_b);
  uint32_t hi = std::max(id_a, id_b);
  std::string label =
      "mask|" + std::to_string(lo) + "|" + std::to_string(hi);
  if (profile == PrgProfile::kRoundSalted) {
    label += "|r" + std::to_string(round);
  }
  return label;
}

inline std::string self_mask_label(uint32_t id, uint32_t round,
                                   PrgProfile profile) {
  std::string label = "self|" + std::to_string(id);
  if (profile == PrgProfile::kRoundSalted) {
    label += "|r" + std::to_string(round);
  }
  return label;
}

// ---------------------------------------------------------------------------
// Authenticated encryption (AES-128-GCM) for share routing.
// ---------------------------------------------------------------------------

inline Bytes aead_key(const SharedSecret& secret) {
  Bytes buf = secret.byte_encoding;
  const char* tag = "seal";
  buf.insert(buf.end(), tag, tag + 4);
  Bytes digest = detail::sha256(buf);
  digest.resize(16);
  return digest;
}

constexpr size_t kNonceSize = 12;
constexpr size_t kTagSize = 16;

inline Bytes seal(const SharedSecret& key, std::span<const uint8_t> plaintext,
                  std::span<const uint8_t> nonce,
                  OpCounters* counters = nullptr) {
  if (nonce.size() != kNonceSize) throw DomainError("nonce must be 12 bytes");
  if (counters != nullptr) ++counters->seals;
  Bytes k = aead_key(key);
  detail::EvpCtx ctx(EVP_CIPHER_CTX_new());
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, k.data(),
                         nonce.data()) != 1) {
    throw Error("gcm init failed");
  }
  Bytes out(plaintext.size() + kTagSize);
  int len = 0;
  if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1) {
    throw Error("gcm encrypt failed");
  }
  int fin = 0;
  EVP_EncryptFinal_ex(ctx.get(), out.data() + len, &fin);
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagSize,
                          out.data() + plaintext.size()) != 1) {
    throw Error("gcm tag failed");
  }
  return out;
}

inline Bytes open(const SharedSecret& key, std::span<const uint8_t> ciphertext,
                  std::span<const uint8_t> nonce,
                  OpCounters* counters = nullptr) {
  if (nonce.size() != kNonceSize) throw DomainError("nonce must be 12 bytes");
  if (ciphertext.size() < kTagSize) throw TamperError("ciphertext too short");
  if (counters != nullptr) ++counters->opens;
  Bytes k = aead_key(key);
  detail::EvpCtx ctx(EVP_CIPHER_CTX_new());
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, k.data(),
                         nonce.data()) != 1) {
    throw Error("gcm init failed");
  }
  size_t body = ciphertext.size() - kTagSize;
  Bytes tag(ciphertext.begin() + body, ciphertext.end());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagSize,
                          tag.data()) != 1) {
    throw Error("gcm tag set failed");
  }
  Bytes out(body);
  int len = 0;
  if (EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext.data(),
                        static_cast<int>(body)) != 1) {
    throw TamperError("authentication failed");
  }
  int fin = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &fin) != 1) {
    throw TamperError("authentication failed");
  }
  return out;
}

// Deterministic per-message nonce from sender/receiver/round; message keys
// are fresh per round so (key, nonce) pairs never repeat.
inline Bytes message_nonce(uint32_t sender, uint32_t receiver,
                           uint32_t round) {
  Bytes nonce;
  put_be32(nonce, sender);
  put_be32(nonce, receiver);
  put_be32(nonce, round);
  return nonce;
}

}  // namespace crypto
}  // namespace accessfl

#endif  // ACCESSFL_CRYPTO_HPP_
