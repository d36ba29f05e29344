#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace slimraft {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

// Chat-completion backend. Implementations throw Error(Errc::Client) when a
// request cannot be completed.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;

  // False when the client must not be called from several threads at once;
  // callers then serialize their requests.
  virtual bool thread_safe() const { return true; }
};

// OpenAI-style request body: {"model":..., "messages":[...], "temperature":...}.
std::string serialize_request(const ChatRequest& request,
                              const std::string& model);

// Extracts choices[0].message.content from a chat-completion response body.
std::string parse_completion(const std::string& body);

// Exponential backoff schedule: initial * multiplier^attempt, capped.
struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  std::chrono::milliseconds delay(int attempt) const;
};

// Classic token bucket; acquire() blocks until a token is available.
// A rate of 0 disables limiting.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  explicit TokenBucket(double rate_per_second = 0.0, double burst = 1.0);

  void acquire();

  // Non-blocking variant used by tests.
  bool try_acquire(Clock::time_point now);

 private:
  void refill(Clock::time_point now);

  std::mutex mutex_;
  double rate_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
};

struct HttpClientConfig {
  std::string endpoint;  // full URL of the chat-completions route
  std::string model;
  std::string api_key;   // sent as a bearer token when non-empty
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  double rate_per_second = 0.0;
};

// Blocking HTTP(S) client for OpenAI-compatible chat-completion endpoints.
// Retries network errors, 429 and 5xx responses with exponential backoff.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(HttpClientConfig config);
  ~HttpChatClient() override;

  std::string complete(const ChatRequest& request) override;

  const HttpClientConfig& config() const noexcept { return config_; }

 private:
  HttpClientConfig config_;
  std::string base_;  // scheme://host[:port]
  std::string path_;
  TokenBucket bucket_;
};

// Replays canned responses in order and remembers every request it saw.
// Throws Error(Errc::Client) once the script runs out unless `cycle` is set.
class ScriptedClient final : public ChatClient {
 public:
  explicit ScriptedClient(std::vector<std::string> responses,
                          bool cycle = false);

  std::string complete(const ChatRequest& request) override;

  std::vector<ChatRequest> requests() const;
  std::size_t calls() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> responses_;
  bool cycle_;
  std::size_t next_ = 0;
  std::vector<ChatRequest> requests_;
};

// Answers through a user-supplied function.
class FunctionClient final : public ChatClient {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;
  explicit FunctionClient(Handler handler, bool thread_safe = true)
      : handler_(std::move(handler)), thread_safe_(thread_safe) {}

  std::string complete(const ChatRequest& request) override {
    return handler_(request);
  }
  bool thread_safe() const override { return thread_safe_; }

 private:
  Handler handler_;
  bool thread_safe_;
};

// Decorator that records the serialized payload of every outbound request.
class CapturingClient final : public ChatClient {
 public:
  explicit CapturingClient(std::shared_ptr<ChatClient> inner,
                           std::string model = "capture")
      : inner_(std::move(inner)), model_(std::move(model)) {}

  std::string complete(const ChatRequest& request) override;
  bool thread_safe() const override { return inner_->thread_safe(); }

  std::vector<std::string> payloads() const;

 private:
  std::shared_ptr<ChatClient> inner_;
  std::string model_;
  mutable std::mutex mutex_;
  std::vector<std::string> payloads_;
};

}  // namespace slimraft
