#include "sillopt/protocol.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

namespace sill {

using Clock = std::chrono::steady_clock;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(ResponseStatus status) {
  switch (status) {
    case ResponseStatus::Ok: return "ok";
    case ResponseStatus::InvalidRequest: return "invalid_request";
    case ResponseStatus::Error: return "error";
  }
  return "error";
}

namespace {

ResponseStatus status_from(std::string_view s) {
  if (s == "ok") return ResponseStatus::Ok;
  if (s == "invalid_request") return ResponseStatus::InvalidRequest;
  if (s == "error") return ResponseStatus::Error;
  throw ProtocolError("unknown response status '" + std::string(s) + "'");
}

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

bool write_all(int fd, std::string_view data, bool socket) {
  while (!data.empty()) {
    const ssize_t n = socket ? ::send(fd, data.data(), data.size(), MSG_NOSIGNAL)
                             : ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

std::string encode_request(const EvaluationRequest& request) {
  ordered_json j;
  j["id"] = request.id;
  j["t"] = request.t;
  return j.dump();
}

EvaluationRequest decode_request(std::string_view line) {
  const auto j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) throw ProtocolError("request is not valid JSON");
  if (!j.is_object()) throw ProtocolError("request must be a JSON object");
  if (!j.contains("id") || !j.at("id").is_string()) throw ProtocolError("request needs a string 'id'");
  EvaluationRequest r;
  r.id = j.at("id").get<std::string>();
  if (!j.contains("t") || !j.at("t").is_array()) throw ProtocolError("request needs an array 't'");
  for (const auto& v : j.at("t")) {
    if (!v.is_number()) throw ProtocolError("thickness values must be numbers");
    r.t.push_back(v.get<double>());
  }
  return r;
}

std::string encode_response(const EvaluationResponse& response) {
  ordered_json j;
  j["id"] = response.id;
  j["status"] = to_string(response.status);
  if (response.objectives) {
    j["ea_ss"] = response.objectives->ea_ss;
    j["ea_f"] = response.objectives->ea_f;
    j["mass"] = response.objectives->mass;
    j["pcf"] = response.objectives->pcf ? ordered_json(*response.objectives->pcf) : ordered_json(nullptr);
  } else {
    j["ea_ss"] = nullptr;
    j["ea_f"] = nullptr;
    j["mass"] = nullptr;
    j["pcf"] = nullptr;
  }
  j["message"] = response.message ? ordered_json(*response.message) : ordered_json(nullptr);
  return j.dump();
}

EvaluationResponse decode_response(std::string_view line) {
  const auto j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("response is not a JSON object");
  try {
    EvaluationResponse r;
    r.id = j.at("id").get<std::string>();
    r.status = status_from(j.at("status").get<std::string>());
    if (j.contains("message") && !j.at("message").is_null()) r.message = j.at("message").get<std::string>();
    if (r.status == ResponseStatus::Ok) r.objectives = j.get<ObjectiveTriple>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
}

EvaluationResponse handle_request_line(const OracleConfig& config, std::string_view line) {
  EvaluationResponse resp;
  EvaluationRequest req;
  try {
    req = decode_request(line);
  } catch (const ProtocolError& e) {
    resp.status = ResponseStatus::InvalidRequest;
    resp.message = e.what();
    return resp;
  }
  resp.id = req.id;
  if (static_cast<int>(req.t.size()) != config.arity()) {
    resp.status = ResponseStatus::InvalidRequest;
    resp.message = "expected " + std::to_string(config.arity()) + " thickness values, got " +
                   std::to_string(req.t.size());
    return resp;
  }
  try {
    const Eigen::Map<const Eigen::VectorXd> t(req.t.data(), static_cast<Eigen::Index>(req.t.size()));
    resp.objectives = evaluate(config, t);
  } catch (const std::exception& e) {
    resp.status = ResponseStatus::Error;
    resp.message = e.what();
  }
  return resp;
}

void serve_stream(const OracleConfig& config, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << encode_response(handle_request_line(config, line)) << '\n' << std::flush;
  }
}

// ---------------------------------------------------------------------------
// Server

EvaluationServer::EvaluationServer(OracleConfig config, std::string host, std::uint16_t port)
    : config_(std::move(config)), host_(std::move(host)) {
  config_.validate();
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw std::runtime_error(errno_text("socket"));
  int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw std::invalid_argument("invalid IPv4 listen address " + host_);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(listen_fd_, 16) < 0) {
    const auto msg = errno_text("bind/listen");
    ::close(listen_fd_);
    throw std::runtime_error(msg);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::pipe2(wake_pipe_, O_CLOEXEC) < 0) {
    ::close(listen_fd_);
    throw std::runtime_error(errno_text("pipe"));
  }
}

EvaluationServer::~EvaluationServer() {
  stop();
  ::close(listen_fd_);
  ::close(wake_pipe_[0]);
  ::close(wake_pipe_[1]);
}

std::string EvaluationServer::endpoint() const { return "tcp://" + host_ + ":" + std::to_string(port_); }

void EvaluationServer::start() {
  if (worker_.joinable()) return;
  worker_ = std::thread([this] { serve_forever(); });
}

void EvaluationServer::stop() {
  if (stopping_.exchange(true)) {
    if (worker_.joinable()) worker_.join();
    return;
  }
  const char byte = 'x';
  [[maybe_unused]] auto n = ::write(wake_pipe_[1], &byte, 1);
  if (worker_.joinable()) worker_.join();
}

void EvaluationServer::serve_forever() {
  while (!stopping_) {
    pollfd fds[2] = {{listen_fd_, POLLIN, 0}, {wake_pipe_[0], POLLIN, 0}};
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      return;
    }
    if (fds[1].revents || stopping_) return;
    if (!(fds[0].revents & POLLIN)) continue;
    const int conn = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (conn < 0) continue;
    int yes = 1;
    ::setsockopt(conn, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof(yes));
    serve_connection(conn);
    ::close(conn);
  }
}

void EvaluationServer::serve_connection(int fd) {
  std::string buffer;
  char chunk[4096];
  while (!stopping_) {
    pollfd fds[2] = {{fd, POLLIN, 0}, {wake_pipe_[0], POLLIN, 0}};
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      return;
    }
    if (fds[1].revents) return;
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return;
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto reply = encode_response(handle_request_line(config_, line)) + "\n";
      ++served_;
      if (!write_all(fd, reply, true)) return;
    }
  }
}

// ---------------------------------------------------------------------------
// Client

struct ExternalClient::Channel {
  int read_fd = -1;
  int write_fd = -1;
  bool socket = false;
  pid_t child = -1;
  std::string buffer;

  ~Channel() {
    if (read_fd >= 0) ::close(read_fd);
    if (write_fd >= 0 && write_fd != read_fd) ::close(write_fd);
    if (child > 0) {
      ::kill(child, SIGTERM);
      ::waitpid(child, nullptr, 0);
    }
  }

  // Returns false on deadline; throws on EOF or I/O failure.
  bool read_line(std::string& line, Clock::time_point deadline) {
    char chunk[4096];
    for (;;) {
      const auto pos = buffer.find('\n');
      if (pos != std::string::npos) {
        line = buffer.substr(0, pos);
        buffer.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      pollfd pfd{read_fd, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw EvaluatorError(errno_text("poll"), true);
      }
      if (ready == 0) return false;
      const ssize_t n = ::read(read_fd, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EvaluatorError(errno_text("read"), true);
      }
      if (n == 0) throw EvaluatorError("evaluator closed the connection", true);
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }
};

namespace {

struct TcpTarget {
  std::string host;
  std::string port;
};

TcpTarget parse_tcp(std::string_view endpoint) {
  if (endpoint.starts_with("tcp://")) endpoint.remove_prefix(6);
  const auto colon = endpoint.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == endpoint.size()) {
    throw std::invalid_argument("endpoint must look like tcp://host:port or exec:<command>, got '" +
                                std::string(endpoint) + "'");
  }
  return {std::string(endpoint.substr(0, colon)), std::string(endpoint.substr(colon + 1))};
}

// Non-blocking connect bounded by the deadline. Returns -1 if the peer refused
// or the attempt timed out.
int try_connect(const addrinfo* ai, Clock::time_point deadline) {
  const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC | SOCK_NONBLOCK, ai->ai_protocol);
  if (fd < 0) return -1;
  if (::connect(fd, ai->ai_addr, ai->ai_addrlen) < 0) {
    if (errno != EINPROGRESS) {
      ::close(fd);
      return -1;
    }
    pollfd pfd{fd, POLLOUT, 0};
    int err = 0;
    socklen_t len = sizeof(err);
    if (::poll(&pfd, 1, remaining_ms(deadline)) <= 0 ||
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len) < 0 || err != 0) {
      ::close(fd);
      return -1;
    }
  }
  const int flags = ::fcntl(fd, F_GETFL);
  ::fcntl(fd, F_SETFL, flags & ~O_NONBLOCK);
  int yes = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof(yes));
  return fd;
}

}  // namespace

ExternalClient::ExternalClient(std::string endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
  if (!endpoint_.starts_with("exec:")) parse_tcp(endpoint_);
}

ExternalClient::~ExternalClient() = default;

void ExternalClient::connect(Clock::time_point deadline) {
  auto channel = std::make_unique<Channel>();
  if (endpoint_.starts_with("exec:")) {
    const std::string command = endpoint_.substr(5);
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) < 0) throw EvaluatorError(errno_text("pipe"), true);
    if (::pipe2(from_child, O_CLOEXEC) < 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw EvaluatorError(errno_text("pipe"), true);
    }
    // Writes to a dead child must surface as errors, not terminate us.
    ::signal(SIGPIPE, SIG_IGN);
    const pid_t pid = ::fork();
    if (pid < 0) throw EvaluatorError(errno_text("fork"), true);
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    channel->write_fd = to_child[1];
    channel->read_fd = from_child[0];
    channel->child = pid;
    channel_ = std::move(channel);
    return;
  }

  const auto target = parse_tcp(endpoint_);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (const int rc = ::getaddrinfo(target.host.c_str(), target.port.c_str(), &hints, &found); rc != 0) {
    throw EvaluatorTimeout("cannot resolve " + endpoint_ + ": " + ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(found, &::freeaddrinfo);
  for (;;) {
    for (const addrinfo* ai = found; ai; ai = ai->ai_next) {
      const int fd = try_connect(ai, deadline);
      if (fd >= 0) {
        channel->read_fd = channel->write_fd = fd;
        channel->socket = true;
        channel_ = std::move(channel);
        return;
      }
    }
    if (Clock::now() >= deadline) {
      throw EvaluatorTimeout("could not reach " + endpoint_ + " within " + std::to_string(timeout_.count()) + " ms");
    }
    std::this_thread::sleep_for(std::min<Clock::duration>(std::chrono::milliseconds(20), deadline - Clock::now()));
  }
}

ObjectiveTriple ExternalClient::query(const ThicknessVector& t) {
  const auto deadline = Clock::now() + timeout_;
  if (!channel_) connect(deadline);

  EvaluationRequest req{std::to_string(next_id_++), std::vector<double>(t.data(), t.data() + t.size())};
  if (!write_all(channel_->write_fd, encode_request(req) + "\n", channel_->socket)) {
    channel_.reset();
    throw EvaluatorError("failed to send request to " + endpoint_, true);
  }
  std::string line;
  bool got = false;
  try {
    got = channel_->read_line(line, deadline);
  } catch (...) {
    channel_.reset();
    throw;
  }
  if (!got) {
    channel_.reset();
    throw EvaluatorTimeout("no response from " + endpoint_ + " within " + std::to_string(timeout_.count()) + " ms");
  }
  const auto resp = decode_response(line);
  if (resp.id != req.id) {
    channel_.reset();
    throw ProtocolError("response id '" + resp.id + "' does not match request id '" + req.id + "'");
  }
  if (resp.status != ResponseStatus::Ok) {
    throw EvaluatorRejected("evaluator returned " + std::string(to_string(resp.status)) + ": " +
                                resp.message.value_or(""),
                            resp.status);
  }
  return *resp.objectives;
}

ObjectiveTriple query_external(const std::string& endpoint, const ThicknessVector& t,
                               std::chrono::milliseconds timeout) {
  ExternalClient client(endpoint, timeout);
  return client.query(t);
}

}  // namespace sill
