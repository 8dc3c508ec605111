#pragma once

#include <cstring>
#include <optional>
#include <span>
#include <vector>

#include "airflux/message.hpp"

namespace airflux {

/// Little-endian wire envelope for the optional TCP transport:
/// magic 0xA1B2 (u16), kind (u8), sender operator index (u16),
/// sender rank (u32), seq (u64), payload length (u32), payload bytes.
struct WireEnvelope {
  MsgKind kind = MsgKind::ControlMsg;
  uint16_t sender_op = 0;
  uint32_t sender_rank = 0;
  uint64_t seq = 0;
  std::vector<uint8_t> payload;
};

inline constexpr uint16_t kEnvelopeMagic = 0xA1B2;
inline constexpr size_t kEnvelopeHeaderSize = 2 + 1 + 2 + 4 + 8 + 4;

void encode_envelope(const WireEnvelope& env, std::vector<uint8_t>& out);
std::vector<uint8_t> encode_envelope(const WireEnvelope& env);

/// Incremental decoder over a byte stream; yields envelopes as they complete.
class EnvelopeReader {
 public:
  void feed(std::span<const uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
  std::optional<WireEnvelope> next();

 private:
  std::vector<uint8_t> buf_;
  size_t consumed_ = 0;
};

/// GradientMsg payload (little-endian): origin rank (u32), origin_seq (u64),
/// clock length n (u32), n x u64 clock entries, format tag (u8: 0 dense,
/// 1 sparse), then dense: length (u64) + f32 values, or sparse: row count
/// (u64) + per row (u32 index, u32 width, f32 x width).
std::vector<uint8_t> encode_gradient(const GradientUpdate& g);
GradientUpdate decode_gradient(std::span<const uint8_t> bytes);

/// MiniBatchMsg payload: batch id (u64), created_ts (i64), pair kind
/// (u8: 0 token pairs, 1 dense), pair count (u64), then per pair either
/// (u32 center, u32 context, u8 label) or (u32 label, u32 dim, f32 x dim).
std::vector<uint8_t> encode_mini_batch(const MiniBatch& b);
MiniBatch decode_mini_batch(std::span<const uint8_t> bytes);

/// Blocking length-prefixed TCP channel carrying WireEnvelopes on loopback or
/// LAN. One connection is one FIFO channel; seq numbering is the sender's.
class TcpConnection {
 public:
  explicit TcpConnection(int fd) : fd_(fd) {}
  TcpConnection(TcpConnection&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  TcpConnection& operator=(TcpConnection&&) = delete;
  ~TcpConnection();

  void send(const WireEnvelope& env);
  /// Blocks for the next envelope; nullopt on orderly peer shutdown.
  std::optional<WireEnvelope> recv();
  void close();
  bool open() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
  EnvelopeReader reader_;
};

class TcpListener {
 public:
  /// Binds to 127.0.0.1 on the given port; port 0 picks a free one.
  explicit TcpListener(uint16_t port);
  ~TcpListener();

  uint16_t port() const { return port_; }
  TcpConnection accept();

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

TcpConnection tcp_connect(const std::string& host, uint16_t port);

}  // namespace airflux
