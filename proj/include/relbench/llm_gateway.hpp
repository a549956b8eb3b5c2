#pragma once

#include "relbench/question.hpp"

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace relbench {

/// Gold information handed to mock providers only. Never sent over the wire
/// and never part of the cache key.
struct AnswerKey {
  Answer expected;
  std::vector<KeywordForms> hop_keywords;
  std::optional<McBody> mc;
  /// Nonzero for knowledge probes: the number of yes/no questions asked.
  int probe_questions = 0;
};

struct ChatRequest {
  std::string model;
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.0;
  int max_tokens = 512;
  /// Question id or probe id; used by the scripted mock and in logs.
  std::string request_id;
  std::optional<AnswerKey> key;
};

struct ChatResponse {
  std::string text;
  Json provider_meta = Json::object();
  bool cached = false;
  long latency_ms = 0;
  std::string timestamp;
};

enum class ProviderKind { http_chat, mock_oracle, mock_adversary, mock_abstainer, mock_scripted };

std::string_view to_string(ProviderKind k);
/// Accepts the enum names and the short forms "http", "oracle",
/// "adversary", "abstainer", "scripted".
ProviderKind parse_provider_kind(std::string_view s);

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{30000};

  /// Delay before attempt `attempt` (1-based, attempt >= 2).
  std::chrono::milliseconds delay_before(int attempt) const;
};

struct ProviderConfig {
  ProviderKind kind = ProviderKind::mock_oracle;
  /// Full chat-completions URL, e.g. "http://127.0.0.1:8080/v1/chat/completions".
  std::string endpoint;
  /// Environment variable holding the bearer token; empty for none.
  std::string api_key_env;
  std::filesystem::path script_path;
  int concurrency_limit = 4;
  RetryPolicy retry;
  std::chrono::seconds timeout{120};

  /// Throws ConfigError on an unusable configuration.
  void validate() const;
};

/// Content-addressed response store, one JSON file per entry.
class ResponseCache {
public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key_of(const ChatRequest& request);
  std::optional<std::string> get(const std::string& key) const;
  /// Atomic write through a temporary file and rename. Returns false (after
  /// logging a warning) when the entry could not be stored.
  bool put(const std::string& key, const ChatRequest& request, const std::string& text) const;

  const std::filesystem::path& dir() const noexcept { return dir_; }

private:
  std::filesystem::path path_of(const std::string& key) const;
  std::filesystem::path dir_;
};

struct GatewayStats {
  std::size_t provider_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
  std::size_t max_in_flight = 0;
};

class Gateway {
public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  /// Throws ConfigError for an invalid provider config or unreadable script.
  Gateway(ProviderConfig config, std::optional<ResponseCache> cache, Sleeper sleeper = {});

  /// Safe to call concurrently. Cache hits skip the provider and the
  /// concurrency gate.
  ChatResponse complete(const ChatRequest& request);

  /// Completes every request on up to concurrency_limit worker threads.
  /// Results are in input order. The first error is rethrown after all
  /// workers stop.
  std::vector<ChatResponse> complete_all(const std::vector<ChatRequest>& requests);

  GatewayStats stats() const;
  const ProviderConfig& config() const noexcept { return config_; }

private:
  std::string dispatch(const ChatRequest& request, Json& meta);
  std::string http_once(const ChatRequest& request, Json& meta);

  ProviderConfig config_;
  std::optional<ResponseCache> cache_;
  Sleeper sleeper_;
  std::map<std::string, std::string> script_;
  std::string bearer_;
  std::counting_semaphore<> gate_;
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_in_flight_{0};
  std::atomic<std::size_t> provider_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> retries_{0};
};

/// Canned replies of the mock providers, exposed for tests.
std::string mock_oracle_reply(const AnswerKey& key);
std::string mock_adversary_reply(const AnswerKey& key);
inline constexpr std::string_view kAbstainerReply = "Unsure. I do not have enough information to answer this question.";

/// Request for a generated question, carrying its gold label for mocks.
ChatRequest request_for(const Question& question, std::string model, int max_tokens = 512);

}  // namespace relbench
