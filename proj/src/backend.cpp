#include "hybridsum/backend.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "json.hpp"

#include "hybridsum/error.hpp"

namespace hybridsum {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

Error protocol_error(const std::string& message) { return Error("protocol", message); }

json parse_object(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw protocol_error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw protocol_error("message is not a JSON object");
  return j;
}

std::string require_id(const json& j) {
  const auto it = j.find("id");
  if (it == j.end() || !it->is_string()) throw protocol_error("missing string field 'id'");
  return it->get<std::string>();
}

Tokens require_tokens(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) {
    throw protocol_error(std::string("field '") + key + "' must be an array of strings");
  }
  Tokens out;
  for (const auto& t : *it) {
    if (!t.is_string()) throw protocol_error(std::string("field '") + key + "' must hold strings");
    out.push_back(t.get<std::string>());
  }
  return out;
}

template <class T>
const T& expect(const Response& r, const char* what) {
  if (const auto* err = std::get_if<ErrorResponse>(&r)) {
    throw BackendError(err->id, "backend reported error: " + err->error);
  }
  if (const auto* ok = std::get_if<T>(&r)) return *ok;
  const std::string id = std::visit([](const auto& x) { return x.id; }, r);
  throw BackendError(id, std::string("expected a ") + what + " response");
}

std::vector<std::pair<std::string, std::string>> encode_all(std::span<const GenerateRequest> reqs) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& r : reqs) out.emplace_back(r.id, encode_request(r));
  return out;
}

std::vector<std::pair<std::string, std::string>> encode_all(std::span<const ClassifyRequest> reqs) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& r : reqs) out.emplace_back(r.id, encode_request(r));
  return out;
}

template <class Req>
void check_unique_ids(std::span<const Req> requests) {
  std::set<std::string> seen;
  for (const auto& r : requests) {
    if (!seen.insert(r.id).second) throw InvalidArgument("duplicate request id '" + r.id + "' in batch");
  }
}

}  // namespace

std::string encode_request(const Request& request) {
  ordered_json j;
  if (const auto* g = std::get_if<GenerateRequest>(&request)) {
    j["id"] = g->id;
    j["type"] = "generate";
    j["code"] = g->code;
    j["ast"] = g->ast ? ordered_json(*g->ast) : ordered_json(nullptr);
  } else {
    const auto& c = std::get<ClassifyRequest>(request);
    j["id"] = c.id;
    j["type"] = "classify";
    j["input_code"] = c.input_code;
    j["retrieved_code"] = c.retrieved_code;
  }
  return j.dump();
}

std::string encode_response(const Response& response) {
  ordered_json j;
  std::visit(
      [&j](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        j["id"] = r.id;
        if constexpr (std::is_same_v<T, GenerateResponse>) {
          j["comment"] = r.comment;
        } else if constexpr (std::is_same_v<T, ClassifyResponse>) {
          j["score"] = r.score;
        } else {
          j["error"] = r.error;
        }
      },
      response);
  return j.dump();
}

std::string encode_handshake(const Handshake& handshake) {
  ordered_json j;
  j["protocol"] = handshake.protocol;
  j["capabilities"] = handshake.capabilities;
  return j.dump();
}

Request parse_request(const std::string& line) {
  const json j = parse_object(line);
  const std::string id = require_id(j);
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) throw protocol_error("missing string field 'type'");
  if (*type == "generate") {
    GenerateRequest r{id, require_tokens(j, "code"), std::nullopt};
    if (const auto ast = j.find("ast"); ast != j.end() && !ast->is_null()) {
      r.ast = require_tokens(j, "ast");
    }
    return r;
  }
  if (*type == "classify") {
    return ClassifyRequest{id, require_tokens(j, "input_code"), require_tokens(j, "retrieved_code")};
  }
  throw protocol_error("unknown request type '" + type->get<std::string>() + "'");
}

Response parse_response(const std::string& line) {
  const json j = parse_object(line);
  const std::string id = require_id(j);
  if (const auto err = j.find("error"); err != j.end()) {
    return ErrorResponse{id, err->is_string() ? err->get<std::string>() : err->dump()};
  }
  if (j.contains("comment")) return GenerateResponse{id, require_tokens(j, "comment")};
  if (const auto score = j.find("score"); score != j.end()) {
    if (!score->is_number()) throw protocol_error("field 'score' must be a number");
    return ClassifyResponse{id, score->get<double>()};
  }
  throw protocol_error("response has none of 'comment', 'score', 'error'");
}

Handshake parse_handshake(const std::string& line) {
  const json j = parse_object(line);
  const auto protocol = j.find("protocol");
  if (protocol == j.end() || !protocol->is_string()) {
    throw protocol_error("handshake lacks a 'protocol' string");
  }
  Handshake h;
  h.protocol = protocol->get<std::string>();
  h.capabilities = require_tokens(j, "capabilities");
  if (h.protocol != kProtocolVersion) {
    throw protocol_error("unsupported protocol '" + h.protocol + "', expected " + kProtocolVersion);
  }
  return h;
}

std::string extract_request_id(const std::string& line) {
  try {
    const json j = json::parse(line);
    if (j.is_object() && j.contains("id") && j["id"].is_string()) return j["id"].get<std::string>();
  } catch (const json::exception&) {
  }
  return "";
}

// ---------------------------------------------------------------------------

std::vector<Tokens> Backend::generate(std::span<const GenerateRequest> requests) {
  if (requests.empty()) return {};
  check_unique_ids(requests);
  if (!supports("generate")) {
    throw BackendError(requests.front().id, "backend does not advertise 'generate'");
  }
  stats_.generate_requests += requests.size();
  auto out = do_generate(requests);
  if (out.size() != requests.size()) throw BackendError(requests.front().id, "short batch reply");
  return out;
}

std::vector<double> Backend::classify(std::span<const ClassifyRequest> requests) {
  if (requests.empty()) return {};
  check_unique_ids(requests);
  if (!supports("classify")) {
    throw BackendError(requests.front().id, "backend does not advertise 'classify'");
  }
  stats_.classify_requests += requests.size();
  auto out = do_classify(requests);
  if (out.size() != requests.size()) throw BackendError(requests.front().id, "short batch reply");
  return out;
}

Tokens Backend::generate_one(const GenerateRequest& request) {
  return generate(std::span<const GenerateRequest>(&request, 1)).front();
}

double Backend::classify_one(const ClassifyRequest& request) {
  return classify(std::span<const ClassifyRequest>(&request, 1)).front();
}

bool Backend::supports(const std::string& capability) const {
  const auto& caps = capabilities();
  return std::find(caps.begin(), caps.end(), capability) != caps.end();
}

// ---------------------------------------------------------------------------

SubprocessBackend::SubprocessBackend(BackendConfig config) : config_(std::move(config)) {
  if (config_.command.empty()) throw InvalidArgument("backend command is empty");
  if (config_.timeout.count() <= 0) throw InvalidArgument("backend timeout must be positive");
  if (config_.max_in_flight == 0) throw InvalidArgument("backend max_in_flight must be >= 1");
  std::signal(SIGPIPE, SIG_IGN);

  int to_child[2];
  int from_child[2];
  if (pipe2(to_child, O_CLOEXEC) != 0) throw BackendError("spawn", std::strerror(errno));
  if (pipe2(from_child, O_CLOEXEC) != 0) {
    close(to_child[0]);
    close(to_child[1]);
    throw BackendError("spawn", std::strerror(errno));
  }
  pid_ = fork();
  if (pid_ < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
    throw BackendError("spawn", std::strerror(errno));
  }
  if (pid_ == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    execl("/bin/sh", "sh", "-c", config_.command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  to_child_ = to_child[1];
  from_child_ = from_child[0];

  try {
    const auto line = read_line("handshake");
    if (!line) throw BackendError("handshake", "backend exited before the handshake");
    handshake_ = parse_handshake(*line);
  } catch (const BackendError&) {
    shutdown();
    throw;
  } catch (const Error& e) {
    shutdown();
    throw BackendError("handshake", e.what());
  }
}

SubprocessBackend::~SubprocessBackend() { shutdown(); }

void SubprocessBackend::shutdown() {
  if (to_child_ >= 0) {
    close(to_child_);
    to_child_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    bool reaped = false;
    for (int i = 0; i < 200 && !reaped; ++i) {
      const pid_t r = waitpid(pid_, &status, WNOHANG);
      reaped = r == pid_ || r < 0;
      if (!reaped) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (!reaped) {
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
  if (from_child_ >= 0) {
    close(from_child_);
    from_child_ = -1;
  }
}

void SubprocessBackend::write_line(const std::string& line, const std::string& id) {
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BackendError(id, std::string("cannot send request: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> SubprocessBackend::read_line(const std::string& waiting_for) {
  const auto deadline = std::chrono::steady_clock::now() + config_.timeout;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      return line;
    }
    if (eof_) {
      if (buffer_.empty()) return std::nullopt;
      std::string line;
      line.swap(buffer_);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      throw BackendError(waiting_for, "timed out after " + std::to_string(config_.timeout.count()) + " ms");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw BackendError(waiting_for, std::string("poll failed: ") + std::strerror(errno));
    }
    if (ready == 0) continue;
    char chunk[65536];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw BackendError(waiting_for, std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) {
      eof_ = true;
    } else {
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }
}

std::vector<Response> SubprocessBackend::exchange(
    const std::vector<std::pair<std::string, std::string>>& lines) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < lines.size(); ++i) index.emplace(lines[i].first, i);

  std::vector<std::optional<Response>> results(lines.size());
  std::set<std::size_t> outstanding;
  std::size_t next = 0;
  auto send_next = [&] {
    write_line(lines[next].second, lines[next].first);
    outstanding.insert(next);
    ++next;
  };
  while (next < lines.size() && outstanding.size() < config_.max_in_flight) send_next();

  while (!outstanding.empty()) {
    const std::string& waiting = lines[*outstanding.begin()].first;
    const auto line = read_line(waiting);
    if (!line) throw BackendError(waiting, "backend exited before replying");
    Response response;
    try {
      response = parse_response(*line);
    } catch (const Error& e) {
      throw BackendError(waiting, std::string("protocol violation: ") + e.what());
    }
    const std::string id = std::visit([](const auto& r) { return r.id; }, response);
    const auto it = index.find(id);
    if (it == index.end() || !outstanding.count(it->second)) {
      throw BackendError(id, "protocol violation: unexpected response id");
    }
    results[it->second] = std::move(response);
    outstanding.erase(it->second);
    if (next < lines.size()) send_next();
  }

  std::vector<Response> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

std::vector<Tokens> SubprocessBackend::do_generate(std::span<const GenerateRequest> requests) {
  const auto responses = exchange(encode_all(requests));
  std::vector<Tokens> out;
  for (const auto& r : responses) out.push_back(expect<GenerateResponse>(r, "generate").comment);
  return out;
}

std::vector<double> SubprocessBackend::do_classify(std::span<const ClassifyRequest> requests) {
  const auto responses = exchange(encode_all(requests));
  std::vector<double> out;
  for (const auto& r : responses) out.push_back(expect<ClassifyResponse>(r, "classify").score);
  return out;
}

// ---------------------------------------------------------------------------

FileBatchBackend::FileBatchBackend(BackendConfig config) : config_(std::move(config)) {
  if (config_.requests_path.empty() || config_.responses_path.empty()) {
    throw InvalidArgument("file-batch backend needs requests and responses paths");
  }
}

std::vector<Response> FileBatchBackend::exchange(
    const std::vector<std::pair<std::string, std::string>>& lines) {
  {
    std::ofstream out(config_.requests_path, std::ios::binary);
    if (!out) throw BackendError(lines.front().first, "cannot write " + config_.requests_path.string());
    for (const auto& [id, line] : lines) out << line << '\n';
  }
  std::ifstream in(config_.responses_path, std::ios::binary);
  if (!in) {
    throw BackendError(lines.front().first,
                       "no responses file " + config_.responses_path.string() + "; requests written to " +
                           config_.requests_path.string());
  }
  std::string text;
  if (!std::getline(in, text)) throw BackendError("handshake", "responses file is empty");
  try {
    capabilities_ = parse_handshake(text).capabilities;
  } catch (const Error& e) {
    throw BackendError("handshake", e.what());
  }

  std::map<std::string, Response> by_id;
  std::size_t line_no = 1;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto r = parse_response(text);
      const std::string id = std::visit([](const auto& x) { return x.id; }, r);
      by_id.insert_or_assign(id, std::move(r));
    } catch (const Error& e) {
      throw BackendError(extract_request_id(text),
                         "responses line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::vector<Response> out;
  for (const auto& [id, line] : lines) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw BackendError(id, "no response in " + config_.responses_path.string());
    out.push_back(it->second);
  }
  return out;
}

std::vector<Tokens> FileBatchBackend::do_generate(std::span<const GenerateRequest> requests) {
  const auto responses = exchange(encode_all(requests));
  std::vector<Tokens> out;
  for (const auto& r : responses) out.push_back(expect<GenerateResponse>(r, "generate").comment);
  return out;
}

std::vector<double> FileBatchBackend::do_classify(std::span<const ClassifyRequest> requests) {
  const auto responses = exchange(encode_all(requests));
  std::vector<double> out;
  for (const auto& r : responses) out.push_back(expect<ClassifyResponse>(r, "classify").score);
  return out;
}

// ---------------------------------------------------------------------------

FunctionBackend::FunctionBackend(GenerateFn generate, ClassifyFn classify)
    : generate_(std::move(generate)), classify_(std::move(classify)) {
  if (generate_) capabilities_.push_back("generate");
  if (classify_) capabilities_.push_back("classify");
}

std::vector<Tokens> FunctionBackend::do_generate(std::span<const GenerateRequest> requests) {
  std::vector<Tokens> out;
  for (const auto& r : requests) {
    try {
      out.push_back(generate_(r));
    } catch (const BackendError&) {
      throw;
    } catch (const std::exception& e) {
      throw BackendError(r.id, e.what());
    }
  }
  return out;
}

std::vector<double> FunctionBackend::do_classify(std::span<const ClassifyRequest> requests) {
  std::vector<double> out;
  for (const auto& r : requests) {
    try {
      out.push_back(classify_(r));
    } catch (const BackendError&) {
      throw;
    } catch (const std::exception& e) {
      throw BackendError(r.id, e.what());
    }
  }
  return out;
}

std::unique_ptr<Backend> open_backend(const BackendConfig& config) {
  if (config.transport == Transport::FileBatch) return std::make_unique<FileBatchBackend>(config);
  return std::make_unique<SubprocessBackend>(config);
}

}  // namespace hybridsum
