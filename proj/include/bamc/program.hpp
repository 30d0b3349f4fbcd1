#pragma once

#include <coroutine>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>

#include "bamc/distribution.hpp"

namespace bamc {

/// Raised when a caller violates the stepwise execution protocol.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Checkpoints: the four things a program can hand back on a step.
struct SampleRequest {
  Distribution dist;
};

struct Observation {
  Distribution dist;
  Value value;
};

struct Output {
  Value value;
};

struct Done {};

using Checkpoint = std::variant<SampleRequest, Observation, Output, Done>;

inline SampleRequest sample(Distribution dist) { return {std::move(dist)}; }
inline Observation observe(Distribution dist, Value value) { return {std::move(dist), std::move(value)}; }
inline Output output(Value value) { return {std::move(value)}; }

/// One run of a probabilistic program, written as a coroutine:
///
///   Execution coin(double p) {
///     auto x = co_await sample(Distribution::categorical({1 - p, p}));
///     co_await observe(Distribution::normal(as_integer(x), 1.0), 0.3);
///   }
///
/// The run is driven by step(). A SampleRequest must be answered with a value
/// on the following step; every other checkpoint is resumed with none. Done is
/// terminal.
class Execution {
 public:
  struct promise_type {
    Checkpoint current{Done{}};
    std::optional<Value> supplied;
    std::exception_ptr error;

    Execution get_return_object() { return Execution(std::coroutine_handle<promise_type>::from_promise(*this)); }
    std::suspend_always initial_suspend() noexcept { return {}; }
    std::suspend_always final_suspend() noexcept { return {}; }
    void return_void() { current = Done{}; }
    void unhandled_exception() { error = std::current_exception(); }

    struct SampleAwaiter {
      promise_type* promise;
      bool await_ready() const noexcept { return false; }
      void await_suspend(std::coroutine_handle<>) const noexcept {}
      Value await_resume() const {
        Value v = std::move(*promise->supplied);
        promise->supplied.reset();
        return v;
      }
    };

    SampleAwaiter await_transform(SampleRequest request) {
      current = std::move(request);
      return {this};
    }
    std::suspend_always await_transform(Observation obs) {
      current = std::move(obs);
      return {};
    }
    std::suspend_always await_transform(Output out) {
      current = std::move(out);
      return {};
    }
  };

  Execution(Execution&& other) noexcept
      : handle_(std::exchange(other.handle_, nullptr)), awaiting_value_(other.awaiting_value_), done_(other.done_) {}

  Execution& operator=(Execution&& other) noexcept {
    if (this != &other) {
      if (handle_) handle_.destroy();
      handle_ = std::exchange(other.handle_, nullptr);
      awaiting_value_ = other.awaiting_value_;
      done_ = other.done_;
    }
    return *this;
  }

  Execution(const Execution&) = delete;
  Execution& operator=(const Execution&) = delete;

  ~Execution() {
    if (handle_) handle_.destroy();
  }

  Checkpoint step(std::optional<Value> supplied = std::nullopt) {
    if (!handle_) throw ProtocolError("step on an empty execution");
    if (done_) throw ProtocolError("step requested after Done");
    if (awaiting_value_ && !supplied) throw ProtocolError("sample request must be answered with a value");
    if (!awaiting_value_ && supplied) throw ProtocolError("value supplied when none was requested");

    auto& promise = handle_.promise();
    promise.supplied = std::move(supplied);
    handle_.resume();
    if (promise.error) {
      done_ = true;
      std::rethrow_exception(std::exchange(promise.error, nullptr));
    }
    if (handle_.done()) {
      done_ = true;
      awaiting_value_ = false;
      return Done{};
    }
    awaiting_value_ = std::holds_alternative<SampleRequest>(promise.current);
    return promise.current;
  }

  bool done() const noexcept { return done_; }

 private:
  explicit Execution(std::coroutine_handle<promise_type> handle) : handle_(handle) {}

  std::coroutine_handle<promise_type> handle_;
  bool awaiting_value_ = false;
  bool done_ = false;
};

/// A probabilistic program: a factory of fresh, deterministic runs.
/// Factories must capture model state by value; coroutine bodies must take
/// their arguments by value so the frame owns them.
class Program {
 public:
  using Factory = std::function<Execution()>;

  explicit Program(Factory factory) : factory_(std::move(factory)) {}

  Execution start() const { return factory_(); }

 private:
  Factory factory_;
};

}  // namespace bamc
