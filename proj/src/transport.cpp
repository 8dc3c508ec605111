#include "airflux/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace airflux {

namespace {

// All wire integers are little-endian.
template <typename T>
void put(std::vector<uint8_t>& out, T v) {
  for (size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<uint8_t>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff));
}

void put_f32(std::vector<uint8_t>& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put(out, bits);
}

class Cursor {
 public:
  explicit Cursor(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T take() {
    if (at_ + sizeof(T) > bytes_.size()) fail(ErrorCode::IoError, "truncated payload");
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(bytes_[at_ + i]) << (8 * i);
    at_ += sizeof(T);
    return static_cast<T>(v);
  }

  float take_f32() {
    const uint32_t bits = take<uint32_t>();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  bool done() const { return at_ == bytes_.size(); }

 private:
  std::span<const uint8_t> bytes_;
  size_t at_ = 0;
};

}  // namespace

void encode_envelope(const WireEnvelope& env, std::vector<uint8_t>& out) {
  put<uint16_t>(out, kEnvelopeMagic);
  put<uint8_t>(out, static_cast<uint8_t>(env.kind));
  put<uint16_t>(out, env.sender_op);
  put<uint32_t>(out, env.sender_rank);
  put<uint64_t>(out, env.seq);
  put<uint32_t>(out, static_cast<uint32_t>(env.payload.size()));
  out.insert(out.end(), env.payload.begin(), env.payload.end());
}

std::vector<uint8_t> encode_envelope(const WireEnvelope& env) {
  std::vector<uint8_t> out;
  out.reserve(kEnvelopeHeaderSize + env.payload.size());
  encode_envelope(env, out);
  return out;
}

std::optional<WireEnvelope> EnvelopeReader::next() {
  const size_t avail = buf_.size() - consumed_;
  if (avail < kEnvelopeHeaderSize) return std::nullopt;
  Cursor header(std::span(buf_).subspan(consumed_, kEnvelopeHeaderSize));
  const auto magic = header.take<uint16_t>();
  if (magic != kEnvelopeMagic) fail(ErrorCode::IoError, "bad envelope magic");
  WireEnvelope env;
  env.kind = static_cast<MsgKind>(header.take<uint8_t>());
  env.sender_op = header.take<uint16_t>();
  env.sender_rank = header.take<uint32_t>();
  env.seq = header.take<uint64_t>();
  const auto len = header.take<uint32_t>();
  if (avail < kEnvelopeHeaderSize + len) return std::nullopt;
  const auto* body = buf_.data() + consumed_ + kEnvelopeHeaderSize;
  env.payload.assign(body, body + len);
  consumed_ += kEnvelopeHeaderSize + len;
  if (consumed_ == buf_.size()) {
    buf_.clear();
    consumed_ = 0;
  } else if (consumed_ > (1u << 20)) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<ptrdiff_t>(consumed_));
    consumed_ = 0;
  }
  return env;
}

std::vector<uint8_t> encode_gradient(const GradientUpdate& g) {
  std::vector<uint8_t> out;
  put<uint32_t>(out, g.origin);
  put<uint64_t>(out, g.origin_seq);
  put<uint32_t>(out, static_cast<uint32_t>(g.origin_clock.size()));
  for (uint64_t c : g.origin_clock) put<uint64_t>(out, c);
  if (!g.delta.sparse()) {
    put<uint8_t>(out, 0);
    const auto& d = g.delta.dense();
    put<uint64_t>(out, static_cast<uint64_t>(d.size()));
    for (Eigen::Index i = 0; i < d.size(); ++i) put_f32(out, d[i]);
  } else {
    put<uint8_t>(out, 1);
    const auto& rows = g.delta.rows();
    put<uint64_t>(out, rows.size());
    for (const auto& r : rows) {
      put<uint32_t>(out, r.row);
      put<uint32_t>(out, static_cast<uint32_t>(r.delta.size()));
      for (Eigen::Index i = 0; i < r.delta.size(); ++i) put_f32(out, r.delta[i]);
    }
  }
  return out;
}

GradientUpdate decode_gradient(std::span<const uint8_t> bytes) {
  Cursor cur(bytes);
  GradientUpdate g;
  g.origin = cur.take<uint32_t>();
  g.origin_seq = cur.take<uint64_t>();
  const auto n = cur.take<uint32_t>();
  g.origin_clock.resize(n);
  for (auto& c : g.origin_clock) c = cur.take<uint64_t>();
  const auto tag = cur.take<uint8_t>();
  if (tag == 0) {
    const auto len = cur.take<uint64_t>();
    Eigen::VectorXf d(static_cast<Eigen::Index>(len));
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = cur.take_f32();
    g.delta.value = std::move(d);
  } else if (tag == 1) {
    const auto count = cur.take<uint64_t>();
    std::vector<SparseRow> rows(count);
    for (auto& r : rows) {
      r.row = cur.take<uint32_t>();
      const auto width = cur.take<uint32_t>();
      r.delta.resize(width);
      for (uint32_t i = 0; i < width; ++i) r.delta[i] = cur.take_f32();
    }
    g.delta.value = std::move(rows);
  } else {
    fail(ErrorCode::IoError, "unknown gradient format tag");
  }
  if (!cur.done()) fail(ErrorCode::IoError, "trailing bytes in gradient payload");
  return g;
}

std::vector<uint8_t> encode_mini_batch(const MiniBatch& b) {
  std::vector<uint8_t> out;
  put<uint64_t>(out, b.id);
  put<uint64_t>(out, static_cast<uint64_t>(b.created_ts));
  const bool tokens = !b.pairs.empty() && b.pairs.front().x.index() == 0;
  put<uint8_t>(out, tokens ? 0 : 1);
  put<uint64_t>(out, b.pairs.size());
  for (const auto& p : b.pairs) {
    if (tokens) {
      const auto& tp = std::get<TokenPair>(p.x);
      put<uint32_t>(out, tp.center);
      put<uint32_t>(out, tp.context);
      put<uint8_t>(out, static_cast<uint8_t>(p.label));
    } else {
      const auto& x = std::get<Eigen::VectorXf>(p.x);
      put<uint32_t>(out, static_cast<uint32_t>(p.label));
      put<uint32_t>(out, static_cast<uint32_t>(x.size()));
      for (Eigen::Index i = 0; i < x.size(); ++i) put_f32(out, x[i]);
    }
  }
  return out;
}

MiniBatch decode_mini_batch(std::span<const uint8_t> bytes) {
  Cursor cur(bytes);
  MiniBatch b;
  b.id = cur.take<uint64_t>();
  b.created_ts = static_cast<TimeNs>(cur.take<uint64_t>());
  const auto tokens = cur.take<uint8_t>() == 0;
  const auto count = cur.take<uint64_t>();
  b.pairs.resize(count);
  for (auto& p : b.pairs) {
    if (tokens) {
      TokenPair tp;
      tp.center = cur.take<uint32_t>();
      tp.context = cur.take<uint32_t>();
      p.x = tp;
      p.label = cur.take<uint8_t>();
    } else {
      p.label = static_cast<int32_t>(cur.take<uint32_t>());
      const auto dim = cur.take<uint32_t>();
      Eigen::VectorXf x(dim);
      for (uint32_t i = 0; i < dim; ++i) x[i] = cur.take_f32();
      p.x = std::move(x);
    }
  }
  if (!cur.done()) fail(ErrorCode::IoError, "trailing bytes in mini-batch payload");
  return b;
}

// ---- sockets ----

namespace {

[[noreturn]] void sys_fail(const std::string& what) {
  fail(ErrorCode::IoError, what + ": " + std::strerror(errno));
}

}  // namespace

TcpConnection::~TcpConnection() { close(); }

void TcpConnection::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void TcpConnection::send(const WireEnvelope& env) {
  if (fd_ < 0) fail(ErrorCode::ChannelClosed, "connection closed");
  const auto bytes = encode_envelope(env);
  size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::ChannelClosed, std::string("send: ") + std::strerror(errno));
    }
    sent += static_cast<size_t>(n);
  }
}

std::optional<WireEnvelope> TcpConnection::recv() {
  if (fd_ < 0) fail(ErrorCode::ChannelClosed, "connection closed");
  for (;;) {
    if (auto env = reader_.next()) return env;
    uint8_t chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::ChannelClosed, std::string("recv: ") + std::strerror(errno));
    }
    if (n == 0) return std::nullopt;
    reader_.feed(std::span(chunk, static_cast<size_t>(n)));
  }
}

TcpListener::TcpListener(uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) sys_fail("socket");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) sys_fail("bind");
  if (::listen(fd_, 8) < 0) sys_fail("listen");
  socklen_t len = sizeof(addr);
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) < 0) sys_fail("getsockname");
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

TcpConnection TcpListener::accept() {
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) sys_fail("accept");
  return TcpConnection(fd);
}

TcpConnection tcp_connect(const std::string& host, uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) sys_fail("socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    fail(ErrorCode::IoError, "bad address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    const int err = errno;
    ::close(fd);
    fail(ErrorCode::ChannelClosed, std::string("connect: ") + std::strerror(err));
  }
  return TcpConnection(fd);
}

}  // namespace airflux
