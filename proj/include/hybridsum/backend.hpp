#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hybridsum/tokens.hpp"

namespace hybridsum {

inline constexpr const char* kProtocolVersion = "hybridsum/1";

struct GenerateRequest {
  std::string id;
  Tokens code;
  std::optional<Tokens> ast;
};

struct ClassifyRequest {
  std::string id;
  Tokens input_code;
  Tokens retrieved_code;
};

using Request = std::variant<GenerateRequest, ClassifyRequest>;

struct GenerateResponse {
  std::string id;
  Tokens comment;
};

struct ClassifyResponse {
  std::string id;
  double score = 0.0;
};

struct ErrorResponse {
  std::string id;
  std::string error;
};

using Response = std::variant<GenerateResponse, ClassifyResponse, ErrorResponse>;

struct Handshake {
  std::string protocol = kProtocolVersion;
  std::vector<std::string> capabilities;
};

// Wire encoding: one JSON object per line, no trailing newline in these helpers.
std::string encode_request(const Request& request);
std::string encode_response(const Response& response);
std::string encode_handshake(const Handshake& handshake);

/// Throws Error("protocol") on malformed lines.
Request parse_request(const std::string& line);
Response parse_response(const std::string& line);
Handshake parse_handshake(const std::string& line);

/// Best-effort id extraction from a line that failed to parse.
std::string extract_request_id(const std::string& line);

struct BackendStats {
  std::size_t generate_requests = 0;
  std::size_t classify_requests = 0;
};

/// A generator and/or classifier reachable over the line protocol. Batch
/// calls return results in request order; request ids must be unique
/// within a batch.
class Backend {
public:
  virtual ~Backend() = default;

  std::vector<Tokens> generate(std::span<const GenerateRequest> requests);
  /// Raw scores as sent by the backend (callers clamp).
  std::vector<double> classify(std::span<const ClassifyRequest> requests);

  Tokens generate_one(const GenerateRequest& request);
  double classify_one(const ClassifyRequest& request);

  virtual const std::vector<std::string>& capabilities() const = 0;
  bool supports(const std::string& capability) const;
  const BackendStats& stats() const noexcept { return stats_; }

protected:
  virtual std::vector<Tokens> do_generate(std::span<const GenerateRequest> requests) = 0;
  virtual std::vector<double> do_classify(std::span<const ClassifyRequest> requests) = 0;

private:
  BackendStats stats_;
};

enum class Transport { Subprocess, FileBatch };

struct BackendConfig {
  Transport transport = Transport::Subprocess;
  /// Shell command for the subprocess transport (run with /bin/sh -c).
  std::string command;
  /// Request/response files for the file-batch transport.
  std::filesystem::path requests_path;
  std::filesystem::path responses_path;
  std::chrono::milliseconds timeout{60'000};
  std::size_t max_in_flight = 16;
};

/// Spawns the backend process and keeps up to max_in_flight requests
/// outstanding; responses may arrive in any order.
class SubprocessBackend final : public Backend {
public:
  explicit SubprocessBackend(BackendConfig config);
  ~SubprocessBackend() override;
  SubprocessBackend(const SubprocessBackend&) = delete;
  SubprocessBackend& operator=(const SubprocessBackend&) = delete;

  const std::vector<std::string>& capabilities() const override { return handshake_.capabilities; }

protected:
  std::vector<Tokens> do_generate(std::span<const GenerateRequest> requests) override;
  std::vector<double> do_classify(std::span<const ClassifyRequest> requests) override;

private:
  std::vector<Response> exchange(const std::vector<std::pair<std::string, std::string>>& lines);
  std::optional<std::string> read_line(const std::string& waiting_for);
  void write_line(const std::string& line, const std::string& id);
  void shutdown();

  BackendConfig config_;
  Handshake handshake_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  bool eof_ = false;
};

/// Offline transport: writes every request of a batch to `requests_path`
/// and reads the answers from `responses_path` (handshake line first). When
/// the responses file does not exist yet the call fails after writing the
/// requests, so the batch can be run elsewhere and the command repeated.
class FileBatchBackend final : public Backend {
public:
  explicit FileBatchBackend(BackendConfig config);

  const std::vector<std::string>& capabilities() const override { return capabilities_; }

protected:
  std::vector<Tokens> do_generate(std::span<const GenerateRequest> requests) override;
  std::vector<double> do_classify(std::span<const ClassifyRequest> requests) override;

private:
  std::vector<Response> exchange(const std::vector<std::pair<std::string, std::string>>& lines);

  BackendConfig config_;
  std::vector<std::string> capabilities_{"generate", "classify"};
};

/// In-process backend from callables, for embedding and tests.
class FunctionBackend final : public Backend {
public:
  using GenerateFn = std::function<Tokens(const GenerateRequest&)>;
  using ClassifyFn = std::function<double(const ClassifyRequest&)>;

  FunctionBackend(GenerateFn generate, ClassifyFn classify = nullptr);

  const std::vector<std::string>& capabilities() const override { return capabilities_; }

protected:
  std::vector<Tokens> do_generate(std::span<const GenerateRequest> requests) override;
  std::vector<double> do_classify(std::span<const ClassifyRequest> requests) override;

private:
  GenerateFn generate_;
  ClassifyFn classify_;
  std::vector<std::string> capabilities_;
};

std::unique_ptr<Backend> open_backend(const BackendConfig& config);

}  // namespace hybridsum
