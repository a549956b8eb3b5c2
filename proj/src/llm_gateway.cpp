#include "relbench/llm_gateway.hpp"

#include "relbench/error.hpp"
#include "relbench/hash.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

namespace relbench {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_temperature(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", t);
  return buf;
}

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

std::optional<Endpoint> split_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) return std::nullopt;
  return Endpoint{m[1].str(), m[2].matched ? m[2].str() : "/v1/chat/completions"};
}

// Thrown inside a single attempt; decides whether the retry loop continues.
struct TransientFailure {
  std::string message;
};

std::string keyword_sentence(const std::vector<KeywordForms>& hops) {
  std::string facts;
  for (const auto& forms : hops) {
    auto it = std::find_if(forms.begin(), forms.end(), [](const std::string& f) { return !f.empty(); });
    if (it == forms.end()) continue;
    if (!facts.empty()) facts += ", ";
    facts += *it;
  }
  return facts.empty() ? "" : " Relevant facts: " + facts + ".";
}

int answer_index(const AnswerKey& key) {
  if (key.expected.kind == AnswerKind::option) return key.expected.option;
  if (key.expected.kind == AnswerKind::none_of_the_above && key.mc) return key.mc->nota_index();
  throw ProtocolError("multiple-choice answer key has no option");
}

bool is_mc(const AnswerKey& key) {
  return key.expected.kind == AnswerKind::option || key.expected.kind == AnswerKind::none_of_the_above;
}

}  // namespace

std::string_view to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::http_chat: return "http_chat";
    case ProviderKind::mock_oracle: return "mock_oracle";
    case ProviderKind::mock_adversary: return "mock_adversary";
    case ProviderKind::mock_abstainer: return "mock_abstainer";
    case ProviderKind::mock_scripted: return "mock_scripted";
  }
  return "?";
}

ProviderKind parse_provider_kind(std::string_view s) {
  for (auto k : {ProviderKind::http_chat, ProviderKind::mock_oracle, ProviderKind::mock_adversary,
                 ProviderKind::mock_abstainer, ProviderKind::mock_scripted}) {
    auto name = to_string(k);
    if (s == name || s == name.substr(name.find('_') + 1)) return k;
  }
  if (s == "http") return ProviderKind::http_chat;
  throw ConfigError("unknown provider '" + std::string(s) + "'");
}

std::chrono::milliseconds RetryPolicy::delay_before(int attempt) const {
  double ms = static_cast<double>(initial_delay.count()) * std::pow(multiplier, std::max(0, attempt - 2));
  return std::chrono::milliseconds(static_cast<long>(std::min(ms, static_cast<double>(max_delay.count()))));
}

void ProviderConfig::validate() const {
  if (concurrency_limit < 1) throw ConfigError("concurrency limit must be at least 1");
  if (retry.max_attempts < 1) throw ConfigError("retry max_attempts must be at least 1");
  if (kind == ProviderKind::http_chat && !split_endpoint(endpoint)) {
    throw ConfigError("http_chat needs an http(s) endpoint URL, got '" + endpoint + "'");
  }
  if (kind == ProviderKind::mock_scripted && script_path.empty()) {
    throw ConfigError("mock_scripted needs a script path");
  }
}

// Cache

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {}

std::string ResponseCache::key_of(const ChatRequest& r) {
  return sha256_fields({r.model, r.system_prompt, r.user_prompt, format_temperature(r.temperature)});
}

fs::path ResponseCache::path_of(const std::string& key) const { return dir_ / key.substr(0, 2) / (key + ".json"); }

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  std::ifstream in(path_of(key));
  if (!in) return std::nullopt;
  try {
    auto j = Json::parse(in);
    if (j.value("key", "") != key) return std::nullopt;
    return j.at("text").get<std::string>();
  } catch (const Json::exception& e) {
    spdlog::warn("ignoring unreadable cache entry {}: {}", path_of(key).string(), e.what());
    return std::nullopt;
  }
}

bool ResponseCache::put(const std::string& key, const ChatRequest& r, const std::string& text) const {
  auto target = path_of(key);
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) {
    spdlog::warn("cache write failed for {}: {}", target.string(), ec.message());
    return false;
  }
  Json entry{{"key", key},
             {"model", r.model},
             {"system_prompt", r.system_prompt},
             {"user_prompt", r.user_prompt},
             {"temperature", r.temperature},
             {"text", text}};
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id();
  auto tmp = target;
  tmp += suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary);
    out << entry.dump(2) << '\n';
    if (!out) {
      spdlog::warn("cache write failed for {}", target.string());
      fs::remove(tmp, ec);
      return false;
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    spdlog::warn("cache rename failed for {}: {}", target.string(), ec.message());
    fs::remove(tmp, ec);
    return false;
  }
  return true;
}

// Mocks

std::string mock_oracle_reply(const AnswerKey& key) {
  if (key.probe_questions > 0) {
    std::string out;
    for (int i = 0; i < key.probe_questions; ++i) out += i ? " Yes." : "Yes.";
    return out;
  }
  std::string label;
  if (key.expected.kind == AnswerKind::none_of_the_above) {
    label = std::string(kNotaText);
  } else if (key.expected.kind == AnswerKind::option) {
    if (!key.mc || key.expected.option < 1 || key.expected.option > static_cast<int>(key.mc->options.size())) {
      throw ProtocolError("answer key option out of range");
    }
    label = "Option " + std::to_string(key.expected.option) + ": " + key.mc->options[key.expected.option - 1].text;
  } else if (key.expected.kind == AnswerKind::yes) {
    label = "Yes.";
  } else if (key.expected.kind == AnswerKind::no) {
    label = "No.";
  } else {
    throw ProtocolError("answer key has no gold answer");
  }
  return label + keyword_sentence(key.hop_keywords);
}

std::string mock_adversary_reply(const AnswerKey& key) {
  if (key.probe_questions > 0) return "No.";
  if (is_mc(key)) {
    if (!key.mc) throw ProtocolError("multiple-choice answer key without options");
    int count = key.mc->option_count();
    int wrong = answer_index(key) % count + 1;
    if (wrong == key.mc->nota_index()) return std::string(kNotaText);
    return "Option " + std::to_string(wrong) + ".";
  }
  if (key.expected.kind == AnswerKind::yes) return "No.";
  if (key.expected.kind == AnswerKind::no) return "Yes.";
  throw ProtocolError("answer key has no gold answer");
}

ChatRequest request_for(const Question& q, std::string model, int max_tokens) {
  ChatRequest r;
  r.model = std::move(model);
  r.system_prompt = q.system_prompt;
  r.user_prompt = q.prompt;
  r.max_tokens = max_tokens;
  r.request_id = q.id;
  r.key = AnswerKey{q.gold.expected, q.gold.hop_keywords, q.mc, 0};
  return r;
}

// Gateway

Gateway::Gateway(ProviderConfig config, std::optional<ResponseCache> cache, Sleeper sleeper)
    : config_(std::move(config)),
      cache_(std::move(cache)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      gate_(std::max(1, config_.concurrency_limit)) {
  config_.validate();
  if (config_.kind == ProviderKind::mock_scripted) {
    std::ifstream in(config_.script_path);
    if (!in) throw ConfigError("cannot read script " + config_.script_path.string());
    try {
      const Json script = Json::parse(in);
      for (const auto& [id, text] : script.items()) script_[id] = text.get<std::string>();
    } catch (const Json::exception& e) {
      throw ConfigError("malformed script " + config_.script_path.string() + ": " + e.what());
    }
  }
  if (config_.kind == ProviderKind::http_chat && !config_.api_key_env.empty()) {
    const char* token = std::getenv(config_.api_key_env.c_str());
    if (!token || !*token) throw ConfigError("environment variable " + config_.api_key_env + " is not set");
    bearer_ = token;
  }
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  std::string key;
  if (cache_) {
    key = ResponseCache::key_of(request);
    if (auto hit = cache_->get(key)) {
      ++cache_hits_;
      ChatResponse r;
      r.text = std::move(*hit);
      r.cached = true;
      r.provider_meta = Json{{"cache_key", key}};
      r.timestamp = utc_now();
      return r;
    }
  }

  auto start = std::chrono::steady_clock::now();
  Json meta = Json::object();
  std::string text;
  gate_.acquire();
  {
    auto now = ++in_flight_;
    auto prev = max_in_flight_.load();
    while (now > prev && !max_in_flight_.compare_exchange_weak(prev, now)) {
    }
  }
  try {
    text = dispatch(request, meta);
  } catch (...) {
    --in_flight_;
    gate_.release();
    throw;
  }
  --in_flight_;
  gate_.release();
  ++provider_calls_;

  ChatResponse r;
  r.text = std::move(text);
  r.provider_meta = std::move(meta);
  r.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  r.timestamp = utc_now();
  if (cache_) {
    r.provider_meta["cache_key"] = key;
    cache_->put(key, request, r.text);
  }
  return r;
}

std::string Gateway::dispatch(const ChatRequest& request, Json& meta) {
  meta["provider"] = std::string(to_string(config_.kind));
  auto need_key = [&]() -> const AnswerKey& {
    if (!request.key) throw ProtocolError("mock provider needs an answer key for " + request.request_id);
    return *request.key;
  };
  switch (config_.kind) {
    case ProviderKind::mock_oracle: return mock_oracle_reply(need_key());
    case ProviderKind::mock_adversary: return mock_adversary_reply(need_key());
    case ProviderKind::mock_abstainer: return std::string(kAbstainerReply);
    case ProviderKind::mock_scripted: {
      auto it = script_.find(request.request_id);
      if (it == script_.end()) throw ProtocolError("script has no reply for " + request.request_id);
      return it->second;
    }
    case ProviderKind::http_chat: break;
  }

  std::string last_error;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      ++retries_;
      auto delay = config_.retry.delay_before(attempt);
      spdlog::debug("retrying {} in {} ms after: {}", request.request_id, delay.count(), last_error);
      sleeper_(delay);
    }
    try {
      meta["attempts"] = attempt;
      return http_once(request, meta);
    } catch (const TransientFailure& f) {
      last_error = f.message;
    }
  }
  throw TransportError("giving up on " + request.request_id + " after " + std::to_string(config_.retry.max_attempts) +
                       " attempts: " + last_error);
}

std::string Gateway::http_once(const ChatRequest& request, Json& meta) {
  auto ep = *split_endpoint(config_.endpoint);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count());
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count());
  httplib::Headers headers;
  if (!bearer_.empty()) headers.emplace("Authorization", "Bearer " + bearer_);

  Json body{{"model", request.model},
            {"messages", Json::array({Json{{"role", "system"}, {"content", request.system_prompt}},
                                      Json{{"role", "user"}, {"content", request.user_prompt}}})},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
  auto res = client.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) throw TransientFailure{"connection failed: " + httplib::to_string(res.error())};
  if (res->status == 429 || res->status >= 500) throw TransientFailure{"HTTP " + std::to_string(res->status)};
  if (res->status != 200) {
    throw TransportError("HTTP " + std::to_string(res->status) + " from " + config_.endpoint + ": " +
                         res->body.substr(0, 200));
  }
  try {
    auto j = Json::parse(res->body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string() || content.get<std::string>().empty()) {
      throw ProtocolError("empty completion for " + request.request_id);
    }
    if (j.contains("id")) meta["id"] = j["id"];
    if (j.contains("usage")) meta["usage"] = j["usage"];
    return content.get<std::string>();
  } catch (const Json::exception& e) {
    throw ProtocolError("malformed completion for " + request.request_id + ": " + e.what());
  }
}

std::vector<ChatResponse> Gateway::complete_all(const std::vector<ChatRequest>& requests) {
  std::vector<ChatResponse> out(requests.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      if (failed) return;
      std::size_t i = next++;
      if (i >= requests.size()) return;
      try {
        out[i] = complete(requests[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
        return;
      }
    }
  };
  std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(config_.concurrency_limit), requests.size());
  std::vector<std::jthread> threads;
  for (std::size_t t = 1; t < n; ++t) threads.emplace_back(worker);
  if (n > 0) worker();
  threads.clear();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

GatewayStats Gateway::stats() const {
  return {provider_calls_.load(), cache_hits_.load(), retries_.load(), max_in_flight_.load()};
}

}  // namespace relbench
