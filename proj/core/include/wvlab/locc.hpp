#ifndef WVLAB_LOCC_HPP
#define WVLAB_LOCC_HPP

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wvlab/protocol.hpp"

namespace wvlab::locc {

// Wire protocol.  One frame = 4-byte big-endian body length + UTF-8 JSON
// body {"type", "session", "seq", "body"}.  Frames above 1 MiB are rejected.
// Sequence numbers increase strictly across a session regardless of sender;
// the session state machine enforces
//   HELLO -> SCENARIO -> COUPLE_DONE -> BELL_RESULT -> POSTSELECT_REQUEST
//         -> POSTSELECT_RESULT -> POINTER_REPORT,
// with ABORT legal at any point.
enum class MsgType {
  Hello,
  Scenario,
  CoupleDone,
  BellResult,
  PostselectRequest,
  PostselectResult,
  PointerReport,
  Abort,
};

const char* msg_type_name(MsgType t);
MsgType msg_type_from_name(const std::string& name);

struct Message {
  MsgType type;
  std::uint64_t session_id = 0;
  std::uint64_t seq = 0;
  nlohmann::json body;

  bool operator==(const Message& other) const = default;
};

constexpr std::size_t kMaxFrameBytes = 1 << 20;

std::vector<std::uint8_t> encode(const Message& msg);
// Throws Error(DecodeError) with the byte offset of the problem in what().
Message decode(std::span<const std::uint8_t> frame);

// --- transport ---

class Socket {
public:
  explicit Socket(int fd);
  Socket(Socket&&) noexcept;
  Socket& operator=(Socket&&) noexcept;
  ~Socket();

  static Socket connect(const std::string& endpoint,
                        std::chrono::milliseconds timeout);

  void set_timeout(std::chrono::milliseconds timeout);
  void send_frame(std::span<const std::uint8_t> frame);
  std::vector<std::uint8_t> recv_frame(); // length-prefixed read

  int fd() const { return fd_; }

private:
  int fd_ = -1;
};

class Listener {
public:
  // endpoint "host:port"; port 0 binds an ephemeral port.
  explicit Listener(const std::string& endpoint);
  ~Listener();
  Listener(Listener&&) noexcept;
  Listener& operator=(Listener&&) noexcept;

  Socket accept(std::chrono::milliseconds timeout);
  std::uint16_t port() const { return port_; }

private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// --- session ---

enum class Role { Alice, Bob };

struct SessionOptions {
  std::chrono::milliseconds timeout{10000};
  std::string transcript_path; // empty: no transcript file
};

// Alice holds the simulated state and pointer and runs the Monte Carlo; Bob
// supplies the postselection choice and receives the readout.  Both sides
// return a ProtocolResult equal to the in-process sample_shots result for
// the same (scenario, shots, seed).
ProtocolResult run_session_alice(Listener& listener, const nlohmann::json& scenario_json,
                                 const Scenario& scenario, std::uint64_t shots,
                                 std::uint64_t seed, const SessionOptions& opts = {});

ProtocolResult run_session_bob(const std::string& endpoint, const nlohmann::json& scenario_json,
                               const Scenario& scenario, std::uint64_t shots,
                               std::uint64_t seed, const SessionOptions& opts = {});

ProtocolResult run_session(Role role, const std::string& endpoint,
                           const nlohmann::json& scenario_json, const Scenario& scenario,
                           std::uint64_t shots, std::uint64_t seed,
                           const SessionOptions& opts = {});

} // namespace wvlab::locc

#endif
