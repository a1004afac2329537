#include "wvlab/locc.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include "wvlab/rng.hpp"

namespace wvlab::locc {

using nlohmann::json;

const char* msg_type_name(MsgType t) {
  switch (t) {
    case MsgType::Hello: return "HELLO";
    case MsgType::Scenario: return "SCENARIO";
    case MsgType::CoupleDone: return "COUPLE_DONE";
    case MsgType::BellResult: return "BELL_RESULT";
    case MsgType::PostselectRequest: return "POSTSELECT_REQUEST";
    case MsgType::PostselectResult: return "POSTSELECT_RESULT";
    case MsgType::PointerReport: return "POINTER_REPORT";
    case MsgType::Abort: return "ABORT";
  }
  return "UNKNOWN";
}

MsgType msg_type_from_name(const std::string& name) {
  for (MsgType t : {MsgType::Hello, MsgType::Scenario, MsgType::CoupleDone, MsgType::BellResult,
                    MsgType::PostselectRequest, MsgType::PostselectResult,
                    MsgType::PointerReport, MsgType::Abort})
    if (name == msg_type_name(t)) return t;
  throw Error(ErrorKind::DecodeError, "unknown message type '" + name + "' at offset 4");
}

std::vector<std::uint8_t> encode(const Message& msg) {
  json j{{"type", msg_type_name(msg.type)},
         {"session", msg.session_id},
         {"seq", msg.seq},
         {"body", msg.body}};
  const std::string body = j.dump();
  if (body.size() > kMaxFrameBytes)
    throw Error(ErrorKind::DecodeError, "frame body exceeds 1 MiB");
  std::vector<std::uint8_t> frame(4 + body.size());
  const auto len = static_cast<std::uint32_t>(body.size());
  frame[0] = static_cast<std::uint8_t>(len >> 24);
  frame[1] = static_cast<std::uint8_t>(len >> 16);
  frame[2] = static_cast<std::uint8_t>(len >> 8);
  frame[3] = static_cast<std::uint8_t>(len);
  std::memcpy(frame.data() + 4, body.data(), body.size());
  return frame;
}

Message decode(std::span<const std::uint8_t> frame) {
  if (frame.size() < 4)
    throw Error(ErrorKind::DecodeError, "truncated length prefix at offset 0");
  const std::uint32_t len = (std::uint32_t(frame[0]) << 24) | (std::uint32_t(frame[1]) << 16) |
                            (std::uint32_t(frame[2]) << 8) | std::uint32_t(frame[3]);
  if (len > kMaxFrameBytes)
    throw Error(ErrorKind::DecodeError, "frame length exceeds 1 MiB at offset 0");
  if (frame.size() != 4 + static_cast<std::size_t>(len))
    throw Error(ErrorKind::DecodeError,
                "frame body truncated at offset " + std::to_string(frame.size()));

  json j;
  try {
    j = json::parse(frame.begin() + 4, frame.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::DecodeError,
                "malformed body at offset " + std::to_string(4 + (e.byte > 0 ? e.byte - 1 : 0)) +
                    ": " + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j.contains("session") || !j.contains("seq") ||
      !j.contains("body") || !j["type"].is_string() || !j["session"].is_number_unsigned() ||
      !j["seq"].is_number_unsigned())
    throw Error(ErrorKind::DecodeError, "missing or ill-typed envelope field at offset 4");

  return Message{msg_type_from_name(j["type"].get<std::string>()),
                 j["session"].get<std::uint64_t>(), j["seq"].get<std::uint64_t>(), j["body"]};
}

// --- sockets ---

namespace {

[[noreturn]] void net_fail(const std::string& what) {
  throw Error(ErrorKind::NetworkError, what + ": " + std::strerror(errno));
}

void apply_timeout(int fd, std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = timeout.count() / 1000;
  tv.tv_usec = (timeout.count() % 1000) * 1000;
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto pos = endpoint.rfind(':');
  if (pos == std::string::npos || pos + 1 >= endpoint.size())
    throw Error(ErrorKind::NetworkError, "endpoint must be host:port, got '" + endpoint + "'");
  return {endpoint.substr(0, pos), endpoint.substr(pos + 1)};
}

} // namespace

Socket::Socket(int fd) : fd_(fd) {}

Socket::Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

Socket Socket::connect(const std::string& endpoint, std::chrono::milliseconds timeout) {
  auto [host, port] = split_endpoint(endpoint);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr)
    throw Error(ErrorKind::NetworkError, "cannot resolve endpoint '" + endpoint + "'");
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    freeaddrinfo(res);
    net_fail("socket");
  }
  apply_timeout(fd, timeout);
  const int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  freeaddrinfo(res);
  if (rc != 0) {
    ::close(fd);
    net_fail("connect to " + endpoint);
  }
  return Socket(fd);
}

void Socket::set_timeout(std::chrono::milliseconds timeout) { apply_timeout(fd_, timeout); }

void Socket::send_frame(std::span<const std::uint8_t> frame) {
  std::size_t sent = 0;
  while (sent < frame.size()) {
    const ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) net_fail("send");
    sent += static_cast<std::size_t>(n);
  }
}

std::vector<std::uint8_t> Socket::recv_frame() {
  auto read_exact = [this](std::uint8_t* buf, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
      const ssize_t r = ::recv(fd_, buf + got, n - got, 0);
      if (r == 0) throw Error(ErrorKind::NetworkError, "connection closed by peer");
      if (r < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK)
          throw Error(ErrorKind::NetworkError, "timeout waiting for message");
        net_fail("recv");
      }
      got += static_cast<std::size_t>(r);
    }
  };

  std::vector<std::uint8_t> frame(4);
  read_exact(frame.data(), 4);
  const std::uint32_t len = (std::uint32_t(frame[0]) << 24) | (std::uint32_t(frame[1]) << 16) |
                            (std::uint32_t(frame[2]) << 8) | std::uint32_t(frame[3]);
  if (len > kMaxFrameBytes)
    throw Error(ErrorKind::DecodeError, "frame length exceeds 1 MiB at offset 0");
  frame.resize(4 + len);
  read_exact(frame.data() + 4, len);
  return frame;
}

Listener::Listener(const std::string& endpoint) {
  auto [host, port] = split_endpoint(endpoint);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr)
    throw Error(ErrorKind::NetworkError, "cannot resolve endpoint '" + endpoint + "'");
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0) {
    freeaddrinfo(res);
    net_fail("socket");
  }
  const int one = 1;
  setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd_, res->ai_addr, res->ai_addrlen) != 0) {
    freeaddrinfo(res);
    ::close(fd_);
    net_fail("bind " + endpoint);
  }
  freeaddrinfo(res);
  if (::listen(fd_, 1) != 0) {
    ::close(fd_);
    net_fail("listen");
  }
  sockaddr_in addr{};
  socklen_t alen = sizeof(addr);
  getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &alen);
  port_ = ntohs(addr.sin_port);
}

Listener::~Listener() {
  if (fd_ >= 0) ::close(fd_);
}

Listener::Listener(Listener&& other) noexcept : fd_(other.fd_), port_(other.port_) {
  other.fd_ = -1;
}

Listener& Listener::operator=(Listener&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.fd_;
    port_ = other.port_;
    other.fd_ = -1;
  }
  return *this;
}

Socket Listener::accept(std::chrono::milliseconds timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (rc == 0) throw Error(ErrorKind::NetworkError, "timeout waiting for peer to connect");
  if (rc < 0) net_fail("poll");
  const int cfd = ::accept(fd_, nullptr, nullptr);
  if (cfd < 0) net_fail("accept");
  apply_timeout(cfd, timeout);
  return Socket(cfd);
}

// --- session ---

namespace {

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw Error(ErrorKind::DecodeError, "expected [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows.push_back(complex_json(m(i, j)));
  return rows;
}

// Per-session bookkeeping: transcript file, strictly increasing sequence
// numbers, ordered message exchange.
class Channel {
public:
  Channel(Socket socket, std::uint64_t session_id, const std::string& transcript_path)
      : socket_(std::move(socket)), session_id_(session_id) {
    if (!transcript_path.empty()) {
      transcript_.open(transcript_path, std::ios::trunc);
      if (!transcript_)
        throw Error(ErrorKind::InvalidArgument,
                    "cannot open transcript file '" + transcript_path + "'");
    }
  }

  std::uint64_t session_id() const { return session_id_; }

  void send(MsgType type, json body) {
    Message msg{type, session_id_, next_seq_++, std::move(body)};
    log("send", msg);
    socket_.send_frame(encode(msg));
  }

  // Receives one message, enforcing session id, monotone seq, and that the
  // type is among `expected`.  An inbound ABORT is surfaced as an error.
  Message expect(std::initializer_list<MsgType> expected) {
    Message msg = decode(socket_.recv_frame());
    log("recv", msg);
    if (msg.type == MsgType::Abort)
      throw Error(ErrorKind::NetworkError,
                  "peer aborted: " + msg.body.value("reason", std::string("unspecified")));
    if (session_established_ && msg.session_id != session_id_)
      abort_with("session-mismatch");
    if (msg.seq < next_seq_) abort_with("order");
    for (MsgType t : expected)
      if (msg.type == t) {
        next_seq_ = msg.seq + 1;
        return msg;
      }
    abort_with("order");
  }

  void adopt_session(std::uint64_t id) {
    session_id_ = id;
    session_established_ = true;
  }
  void mark_established() { session_established_ = true; }

  [[noreturn]] void abort_with(const std::string& reason) {
    try {
      Message msg{MsgType::Abort, session_id_, next_seq_++, json{{"reason", reason}}};
      log("send", msg);
      socket_.send_frame(encode(msg));
    } catch (const Error&) {
      // peer may already be gone; the transcript still records the attempt
    }
    throw Error(ErrorKind::NetworkError, "session aborted: " + reason);
  }

private:
  void log(const char* dir, const Message& msg) {
    if (!transcript_.is_open()) return;
    const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    json line{{"ts_ms", now},
              {"dir", dir},
              {"type", msg_type_name(msg.type)},
              {"session", msg.session_id},
              {"seq", msg.seq},
              {"body", msg.body}};
    transcript_ << line.dump() << "\n";
    transcript_.flush();
  }

  Socket socket_;
  std::uint64_t session_id_;
  std::uint64_t next_seq_ = 0;
  bool session_established_ = false;
  std::ofstream transcript_;
};

json result_json(const ProtocolResult& r) {
  return json{{"analytic_wv", complex_json(r.analytic_wv)},
              {"estimate", complex_json(r.pointer_estimate)},
              {"estimate_valid", r.estimate_valid},
              {"bell_outcome_probs", r.bell_outcome_probs},
              {"joint_success_prob", r.joint_success_prob},
              {"shots_used", r.shots_used}};
}

void result_from_json(const json& j, ProtocolResult& r) {
  r.analytic_wv = complex_from_json(j.at("analytic_wv"));
  r.pointer_estimate = complex_from_json(j.at("estimate"));
  r.estimate_valid = j.at("estimate_valid").get<bool>();
  const auto& probs = j.at("bell_outcome_probs");
  for (int i = 0; i < 4; ++i) r.bell_outcome_probs[i] = probs.at(i).get<double>();
  r.joint_success_prob = j.at("joint_success_prob").get<double>();
  r.shots_used = j.at("shots_used").get<std::uint64_t>();
}

} // namespace

ProtocolResult run_session_alice(Listener& listener, const json& scenario_json,
                                 const Scenario& scenario, std::uint64_t shots,
                                 std::uint64_t seed, const SessionOptions& opts) {
  Channel ch(listener.accept(opts.timeout), 0, opts.transcript_path);

  Message hello = ch.expect({MsgType::Hello});
  ch.adopt_session(hello.session_id);
  ch.send(MsgType::Hello, json::object());

  Message scen = ch.expect({MsgType::Scenario});
  if (scen.body.value("scenario", json()).dump() != scenario_json.dump() ||
      scen.body.value("shots", std::uint64_t(0)) != shots ||
      scen.body.value("seed", std::uint64_t(0)) != seed)
    ch.abort_with("scenario-mismatch");

  ch.send(MsgType::CoupleDone, json::object());
  ch.send(MsgType::BellResult, json{{"outcome", scenario.accepted_outcome()}});

  Message request = ch.expect({MsgType::PostselectRequest});
  const json expected_projector =
      matrix_json(std::holds_alternative<PureState>(scenario.post)
                      ? Mat(std::get<PureState>(scenario.post).amps() *
                            std::get<PureState>(scenario.post).amps().adjoint())
                      : std::get<DensityOp>(scenario.post).mat());
  if (request.body.value("projector", json()).dump() != expected_projector.dump())
    ch.abort_with("postselect-mismatch");

  ProtocolResult result;
  try {
    result = sample_shots(scenario, shots, seed);
  } catch (const Error& e) {
    ch.abort_with(std::string(error_kind_name(e.kind())));
  }

  ch.send(MsgType::PostselectResult, json{{"success", true}});
  ch.send(MsgType::PointerReport, json{{"meanQ", result.pointer_mean_q},
                                       {"meanP", result.pointer_mean_p},
                                       {"shots", result.shots_used},
                                       {"result", result_json(result)}});
  return result;
}

ProtocolResult run_session_bob(const std::string& endpoint, const json& scenario_json,
                               const Scenario& scenario, std::uint64_t shots,
                               std::uint64_t seed, const SessionOptions& opts) {
  Channel ch(Socket::connect(endpoint, opts.timeout),
             mix64(seed ^ 0xb0bULL), opts.transcript_path);
  ch.mark_established();

  ch.send(MsgType::Hello, json::object());
  ch.expect({MsgType::Hello});

  ch.send(MsgType::Scenario,
          json{{"scenario", scenario_json}, {"shots", shots}, {"seed", seed}});

  ch.expect({MsgType::CoupleDone});
  Message bell = ch.expect({MsgType::BellResult});
  if (bell.body.value("outcome", 0) != scenario.accepted_outcome())
    ch.abort_with("unexpected-bell-outcome");

  const Mat projector = std::holds_alternative<PureState>(scenario.post)
                            ? Mat(std::get<PureState>(scenario.post).amps() *
                                  std::get<PureState>(scenario.post).amps().adjoint())
                            : std::get<DensityOp>(scenario.post).mat();
  ch.send(MsgType::PostselectRequest, json{{"projector", matrix_json(projector)}});

  ch.expect({MsgType::PostselectResult});
  Message report = ch.expect({MsgType::PointerReport});

  ProtocolResult result;
  result_from_json(report.body.at("result"), result);
  result.pointer_mean_q = report.body.at("meanQ").get<double>();
  result.pointer_mean_p = report.body.at("meanP").get<double>();
  result.transcript = {{"preselect", "remote"},
                       {"couple", "remote"},
                       {"bell_measure", "remote"},
                       {"classical_msg", "alice->bob bell_outcome"},
                       {"bob_project", "requested"},
                       {"classical_msg", "bob->alice postselect_result"},
                       {"readout", "remote"}};
  return result;
}

ProtocolResult run_session(Role role, const std::string& endpoint, const json& scenario_json,
                           const Scenario& scenario, std::uint64_t shots, std::uint64_t seed,
                           const SessionOptions& opts) {
  if (role == Role::Alice) {
    Listener listener(endpoint);
    return run_session_alice(listener, scenario_json, scenario, shots, seed, opts);
  }
  return run_session_bob(endpoint, scenario_json, scenario, shots, seed, opts);
}

} // namespace wvlab::locc
