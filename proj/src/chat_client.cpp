#include "slimraft/chat_client.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "slimraft/error.hpp"

namespace slimraft {

using json = nlohmann::json;

std::string serialize_request(const ChatRequest& request,
                              const std::string& model) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  return json{{"model", model},
              {"messages", std::move(messages)},
              {"temperature", request.temperature}}
      .dump();
}

std::string parse_completion(const std::string& body) {
  const auto doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(Errc::Client, "chat endpoint returned invalid JSON");
  }
  try {
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw Error(Errc::Client,
                "chat endpoint response has no choices[0].message.content");
  }
}

std::chrono::milliseconds RetryPolicy::delay(int attempt) const {
  const double ms = static_cast<double>(initial_backoff.count()) *
                    std::pow(multiplier, attempt);
  const double capped = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second),
      capacity_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      last_(Clock::now()) {}

void TokenBucket::refill(Clock::time_point now) {
  const std::chrono::duration<double> elapsed = now - last_;
  if (elapsed.count() > 0) {
    tokens_ = std::min(capacity_, tokens_ + elapsed.count() * rate_);
    last_ = now;
  }
}

bool TokenBucket::try_acquire(Clock::time_point now) {
  std::lock_guard lock(mutex_);
  if (rate_ <= 0.0) return true;
  refill(now);
  if (tokens_ >= 1.0) {
    tokens_ -= 1.0;
    return true;
  }
  return false;
}

void TokenBucket::acquire() {
  if (rate_ <= 0.0) return;
  while (true) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mutex_);
      refill(Clock::now());
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

HttpChatClient::HttpChatClient(HttpClientConfig config)
    : config_(std::move(config)), bucket_(config_.rate_per_second) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, kUrl)) {
    throw Error(Errc::InvalidArgument,
                "endpoint must be an http(s) URL: '" + config_.endpoint + "'");
  }
  base_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

HttpChatClient::~HttpChatClient() = default;

std::string HttpChatClient::complete(const ChatRequest& request) {
  const auto body = serialize_request(request, config_.model);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.retry.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.retry.delay(attempt - 1));
    bucket_.acquire();

    httplib::Client client(base_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
        config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return parse_completion(res->body);
    last_error = "HTTP " + std::to_string(res->status);
    const bool transient = res->status == 429 || res->status >= 500;
    if (!transient) break;
  }
  throw Error(Errc::Client, "chat request to " + config_.endpoint +
                                " failed: " + last_error);
}

ScriptedClient::ScriptedClient(std::vector<std::string> responses, bool cycle)
    : responses_(std::move(responses)), cycle_(cycle) {}

std::string ScriptedClient::complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
  if (responses_.empty() || (!cycle_ && next_ >= responses_.size())) {
    throw Error(Errc::Client, "scripted client has no response left");
  }
  const auto& out = responses_[next_ % responses_.size()];
  ++next_;
  return out;
}

std::vector<ChatRequest> ScriptedClient::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::size_t ScriptedClient::calls() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

std::string CapturingClient::complete(const ChatRequest& request) {
  {
    std::lock_guard lock(mutex_);
    payloads_.push_back(serialize_request(request, model_));
  }
  return inner_->complete(request);
}

std::vector<std::string> CapturingClient::payloads() const {
  std::lock_guard lock(mutex_);
  return payloads_;
}

}  // namespace slimraft
