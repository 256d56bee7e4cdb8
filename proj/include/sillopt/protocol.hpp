#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sillopt/oracle.hpp"

// Newline-delimited JSON evaluation protocol.
//
//   request:  {"id": "<string>", "t": [<mm>, ...]}
//   response: {"id": "<string>", "status": "ok"|"invalid_request"|"error",
//              "ea_ss": <J>, "ea_f": <J>, "mass": <kg>, "pcf": <N|null>,
//              "message": <string|null>}
//
// One message per line, UTF-8. A connection carries at most one request in
// flight; responses arrive in request order.

namespace sill {

struct EvaluationRequest {
  std::string id;
  std::vector<double> t;
};

enum class ResponseStatus { Ok, InvalidRequest, Error };

struct EvaluationResponse {
  std::string id;
  ResponseStatus status = ResponseStatus::Ok;
  std::optional<ObjectiveTriple> objectives;
  std::optional<std::string> message;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluator failures carry whether retrying the same request can succeed.
class EvaluatorError : public std::runtime_error {
 public:
  EvaluatorError(const std::string& what, bool retryable) : std::runtime_error(what), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

/// The evaluator did not answer (or could not be reached) before the deadline.
class EvaluatorTimeout : public EvaluatorError {
 public:
  explicit EvaluatorTimeout(const std::string& what) : EvaluatorError(what, true) {}
};

/// The evaluator answered with a non-ok status.
class EvaluatorRejected : public EvaluatorError {
 public:
  EvaluatorRejected(const std::string& what, ResponseStatus status)
      : EvaluatorError(what, false), status_(status) {}
  ResponseStatus status() const { return status_; }

 private:
  ResponseStatus status_;
};

std::string_view to_string(ResponseStatus status);

std::string encode_request(const EvaluationRequest& request);
EvaluationRequest decode_request(std::string_view line);
std::string encode_response(const EvaluationResponse& response);
EvaluationResponse decode_response(std::string_view line);

/// Answer a single request line. Never throws: malformed input becomes an
/// "invalid_request" response and evaluation failures become "error".
EvaluationResponse handle_request_line(const OracleConfig& config, std::string_view line);

/// Serve requests from `in` until EOF, one response line per request line.
void serve_stream(const OracleConfig& config, std::istream& in, std::ostream& out);

/// Reference external evaluator listening on a TCP port.
///
/// Connections are handled one at a time on a background thread; further
/// clients wait in the listen backlog.
class EvaluationServer {
 public:
  /// Port 0 picks a free ephemeral port; see port().
  EvaluationServer(OracleConfig config, std::string host = "127.0.0.1", std::uint16_t port = 0);
  ~EvaluationServer();
  EvaluationServer(const EvaluationServer&) = delete;
  EvaluationServer& operator=(const EvaluationServer&) = delete;

  std::uint16_t port() const { return port_; }
  std::string endpoint() const;
  std::uint64_t requests_served() const { return served_.load(); }

  /// Block the calling thread serving until stop() is called.
  void serve_forever();
  void start();
  void stop();

 private:
  void serve_connection(int fd);

  OracleConfig config_;
  std::string host_;
  std::uint16_t port_ = 0;
  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> served_{0};
  std::thread worker_;
};

/// Client for the protocol. Endpoints:
///   "tcp://host:port" (or "host:port")  connect over TCP
///   "exec:<shell command>"              spawn a process speaking the protocol on stdio
///
/// Unreachable TCP endpoints are retried until the timeout elapses and then
/// reported as EvaluatorTimeout. After a timeout the connection is dropped and
/// re-established by the next query.
class ExternalClient {
 public:
  ExternalClient(std::string endpoint, std::chrono::milliseconds timeout);
  ~ExternalClient();
  ExternalClient(const ExternalClient&) = delete;
  ExternalClient& operator=(const ExternalClient&) = delete;

  ObjectiveTriple query(const ThicknessVector& t);
  const std::string& endpoint() const { return endpoint_; }

 private:
  struct Channel;
  void connect(std::chrono::steady_clock::time_point deadline);

  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<Channel> channel_;
  std::uint64_t next_id_ = 0;
};

/// One-shot query over a fresh connection.
ObjectiveTriple query_external(const std::string& endpoint, const ThicknessVector& t,
                               std::chrono::milliseconds timeout);

}  // namespace sill
