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

#ifndef ACCESSFL_WIRE_HPP_
#define ACCESSFL_WIRE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "accessfl/bignum.hpp"
#include "accessfl/common.hpp"
#include "accessfl/crypto.hpp"

namespace accessfl {
namespace wire {

// Wire format: 1-byte kind tag, 4-byte round, 4-byte sender, 4-byte payload
// length, payload. Byte ledgers count the full frame.
constexpr size_t kHeaderSize = 13;
constexpr uint32_t kServerId = 0xFFFFFFFF;
constexpr uint32_t kBroadcastId = 0xFFFFFFFE;

enum class MsgKind : uint8_t {
  kPublicKey = 1,
  kPublicKeyList = 2,
  kCipherShares = 3,
  kMaskedModel = 4,
  kParticipantUpdate = 5,
  kShareReveal = 6,
  kGlobalModel = 7,
};

inline const char* kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::kPublicKey: return "PublicKey";
    case MsgKind::kPublicKeyList: return "PublicKeyList";
    case MsgKind::kCipherShares: return "CipherShares";
    case MsgKind::kMaskedModel: return "MaskedModel";
    case MsgKind::kParticipantUpdate: return "ParticipantUpdate";
    case MsgKind::kShareReveal: return "ShareReveal";
    case MsgKind::kGlobalModel: return "GlobalModel";
  }
  return "Unknown";
}

struct Message {
  MsgKind kind;
  uint32_t round = 0;
  uint32_t sender = 0;
  Bytes payload;

  size_t wire_size() const { return kHeaderSize + payload.size(); }

  Bytes serialize() const {
    Bytes out;
    out.reserve(wire_size());
    out.push_back(static_cast<uint8_t>(kind));
    put_be32(out, round);
    put_be32(out, sender);
    put_be32(out, static_cast<uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
  }
};

// Group and field elements travel as zero-padded decimal text of a width
// fixed by the run profile. Fixed-width text keeps ledgers independent of
// the particular values on the wire, so accounting runs can use the fast
// toy group while reporting the byte footprint of the configured profile.
struct WireProfile {
  size_t key_digits = 0;    // public keys and group elements
  size_t share_digits = 0;  // share field elements

  static WireProfile for_groups(const crypto::DhParams& params,
                                const Bignum& share_field) {
    return WireProfile{decimal_width(params.prime_p - 1),
                       decimal_width(share_field - 1)};
  }
};

// --------------------------------------------------------------------------
// Payload codecs.
// --------------------------------------------------------------------------

inline Bytes encode_public_keys(const std::vector<Bignum>& keys,
                                const WireProfile& wp) {
  Bytes out;
  out.push_back(static_cast<uint8_t>(keys.size()));
  for (const Bignum& k : keys) {
    std::string s = to_fixed_decimal(k, wp.key_digits);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

inline std::vector<Bignum> decode_public_keys(std::span<const uint8_t> payload,
                                              const WireProfile& wp) {
  if (payload.empty()) throw DataError("empty key payload");
  size_t n = payload[0];
  if (payload.size() != 1 + n * wp.key_digits) {
    throw DataError("malformed key payload");
  }
  std::vector<Bignum> out;
  for (size_t i = 0; i < n; ++i) {
    std::string s(payload.begin() + 1 + i * wp.key_digits,
                  payload.begin() + 1 + (i + 1) * wp.key_digits);
    out.push_back(from_decimal(s));
  }
  return out;
}

struct KeyListEntry {
  uint32_t id = 0;
  std::vector<Bignum> keys;
};

// Key list broadcast; the optional adjacency section carries the neighbor
// graph when the protocol pairs over one.
inline Bytes encode_key_list(const std::vector<KeyListEntry>& entries,
                             const WireProfile& wp,
                             const std::vector<std::vector<uint32_t>>*
                                 adjacency = nullptr) {
  Bytes out;
  put_be32(out, static_cast<uint32_t>(entries.size()));
  for (const KeyListEntry& e : entries) {
    put_be32(out, e.id);
    out.push_back(static_cast<uint8_t>(e.keys.size()));
    for (const Bignum& k : e.keys) {
      std::string s = to_fixed_decimal(k, wp.key_digits);
      out.insert(out.end(), s.begin(), s.end());
    }
  }
  out.push_back(adjacency != nullptr ? 1 : 0);
  if (adjacency != nullptr) {
    for (const auto& nbrs : *adjacency) {
      put_be32(out, static_cast<uint32_t>(nbrs.size()));
      for (uint32_t n : nbrs) put_be32(out, n);
    }
  }
  return out;
}

struct KeyList {
  std::vector<KeyListEntry> entries;
  std::optional<std::vector<std::vector<uint32_t>>> adjacency;
};

inline KeyList decode_key_list(std::span<const uint8_t> payload,
                               const WireProfile& wp) {
  KeyList out;
  size_t off = 0;
  uint32_t n = get_be32(payload, off);
  off += 4;
  for (uint32_t i = 0; i < n; ++i) {
    KeyListEntry e;
    e.id = get_be32(payload, off);
    off += 4;
    if (off >= payload.size()) throw DataError("truncated key list");
    size_t nk = payload[off++];
    for (size_t k = 0; k < nk; ++k) {
      if (off + wp.key_digits > payload.size()) {
        throw DataError("truncated key list");
      }
      std::string s(payload.begin() + off, payload.begin() + off +
                                               wp.key_digits);
      e.keys.push_back(from_decimal(s));
      off += wp.key_digits;
    }
    out.entries.push_back(std::move(e));
  }
  if (off >= payload.size()) throw DataError("truncated key list");
  bool has_adj = payload[off++] != 0;
  if (has_adj) {
    std::vector<std::vector<uint32_t>> adj(n);
    for (uint32_t i = 0; i < n; ++i) {
      uint32_t deg = get_be32(payload, off);
      off += 4;
      for (uint32_t d = 0; d < deg; ++d) {
        adj[i].push_back(get_be32(payload, off));
        off += 4;
      }
    }
    out.adjacency = std::move(adj);
  }
  return out;
}

// Cipher upload (client -> server): routing target plus the sealed blob.
inline Bytes encode_cipher_upload(uint32_t target, const Bytes& ciphertext) {
  Bytes out;
  put_be32(out, target);
  put_be32(out, static_cast<uint32_t>(ciphertext.size()));
  out.insert(out.end(), ciphertext.begin(), ciphertext.end());
  return out;
}

struct CipherItem {
  uint32_t peer = 0;  // target on upload, origin in a bundle
  Bytes ciphertext;
};

inline CipherItem decode_cipher_upload(std::span<const uint8_t> payload) {
  CipherItem item;
  item.peer = get_be32(payload, 0);
  uint32_t len = get_be32(payload, 4);
  if (payload.size() != 8 + len) throw DataError("malformed cipher upload");
  item.ciphertext.assign(payload.begin() + 8, payload.end());
  return item;
}

// Cipher bundle (server -> one client): everything addressed to it.
inline Bytes encode_cipher_bundle(const std::vector<CipherItem>& items) {
  Bytes out;
  put_be32(out, static_cast<uint32_t>(items.size()));
  for (const CipherItem& it : items) {
    put_be32(out, it.peer);
    put_be32(out, static_cast<uint32_t>(it.ciphertext.size()));
    out.insert(out.end(), it.ciphertext.begin(), it.ciphertext.end());
  }
  return out;
}

inline std::vector<CipherItem> decode_cipher_bundle(
    std::span<const uint8_t> payload) {
  std::vector<CipherItem> out;
  size_t off = 0;
  uint32_t n = get_be32(payload, off);
  off += 4;
  for (uint32_t i = 0; i < n; ++i) {
    CipherItem item;
    item.peer = get_be32(payload, off);
    off += 4;
    uint32_t len = get_be32(payload, off);
    off += 4;
    if (off + len > payload.size()) throw DataError("truncated bundle");
    item.ciphertext.assign(payload.begin() + off, payload.begin() + off + len);
    off += len;
    out.push_back(std::move(item));
  }
  return out;
}

// Plaintext of one routed share pair: (i || j || b share || sk share).
struct SharePlaintext {
  uint32_t from = 0;
  uint32_t to = 0;
  uint32_t b_x = 0;
  Bignum b_y;
  uint32_t sk_x = 0;
  Bignum sk_y;
};

inline Bytes encode_share_plaintext(const SharePlaintext& sp,
                                    const WireProfile& wp) {
  Bytes out;
  put_be32(out, sp.from);
  put_be32(out, sp.to);
  put_be32(out, sp.b_x);
  std::string b = to_fixed_decimal(sp.b_y, wp.share_digits);
  out.insert(out.end(), b.begin(), b.end());
  put_be32(out, sp.sk_x);
  std::string k = to_fixed_decimal(sp.sk_y, wp.share_digits);
  out.insert(out.end(), k.begin(), k.end());
  return out;
}

inline SharePlaintext decode_share_plaintext(std::span<const uint8_t> buf,
                                             const WireProfile& wp) {
  if (buf.size() != 12 + wp.share_digits + 4 + wp.share_digits) {
    throw DataError("malformed share plaintext");
  }
  SharePlaintext sp;
  sp.from = get_be32(buf, 0);
  sp.to = get_be32(buf, 4);
  sp.b_x = get_be32(buf, 8);
  size_t off = 12;
  sp.b_y = from_decimal(std::string(buf.begin() + off,
                                    buf.begin() + off + wp.share_digits));
  off += wp.share_digits;
  sp.sk_x = get_be32(buf, off);
  off += 4;
  sp.sk_y = from_decimal(std::string(buf.begin() + off,
                                     buf.begin() + off + wp.share_digits));
  return sp;
}

inline Bytes encode_participants(const std::vector<uint32_t>& ids) {
  Bytes out;
  put_be32(out, static_cast<uint32_t>(ids.size()));
  for (uint32_t id : ids) put_be32(out, id);
  return out;
}

inline std::vector<uint32_t> decode_participants(
    std::span<const uint8_t> payload) {
  uint32_t n = get_be32(payload, 0);
  if (payload.size() != 4 + 4 * size_t{n}) {
    throw DataError("malformed participant list");
  }
  std::vector<uint32_t> out;
  out.reserve(n);
  for (uint32_t i = 0; i < n; ++i) out.push_back(get_be32(payload, 4 + 4 * i));
  return out;
}

// Share reveal: owner/x/y triples. kB entries always flow; kSk entries only
// when dropouts forced shared-mask reconstruction.
enum class RevealKind : uint8_t { kB = 0, kSk = 1 };

struct RevealEntry {
  uint32_t owner = 0;
  uint32_t x = 0;
  Bignum y;
};

inline Bytes encode_reveal(RevealKind kind,
                           const std::vector<RevealEntry>& entries,
                           const WireProfile& wp) {
  Bytes out;
  out.push_back(static_cast<uint8_t>(kind));
  put_be32(out, static_cast<uint32_t>(entries.size()));
  for (const RevealEntry& e : entries) {
    put_be32(out, e.owner);
    put_be32(out, e.x);
    std::string y = to_fixed_decimal(e.y, wp.share_digits);
    out.insert(out.end(), y.begin(), y.end());
  }
  return out;
}

struct Reveal {
  RevealKind kind = RevealKind::kB;
  std::vector<RevealEntry> entries;
};

inline Reveal decode_reveal(std::span<const uint8_t> payload,
                            const WireProfile& wp) {
  if (payload.empty()) throw DataError("empty reveal");
  Reveal out;
  out.kind = static_cast<RevealKind>(payload[0]);
  uint32_t n = get_be32(payload, 1);
  size_t off = 5;
  for (uint32_t i = 0; i < n; ++i) {
    RevealEntry e;
    e.owner = get_be32(payload, off);
    e.x = get_be32(payload, off + 4);
    off += 8;
    if (off + wp.share_digits > payload.size()) {
      throw DataError("truncated reveal");
    }
    e.y = from_decimal(std::string(payload.begin() + off,
                                   payload.begin() + off + wp.share_digits));
    off += wp.share_digits;
    out.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace wire
}  // namespace accessfl

#endif  // ACCESSFL_WIRE_HPP_
