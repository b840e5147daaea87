#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <istream>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include "copan/error.hpp"
#include "copan/mock.hpp"
#include "copan/protocol.hpp"

namespace copan::engine {

using nlohmann::json;

namespace {

class Answerer {
 public:
  Answerer(std::ostream& out, const Responder& respond, const MockServerOptions& options)
      : out_(out), respond_(respond), options_(options), rng_(options.seed) {}

  // Returns false when the request must not be answered.
  bool answer(const std::string& line) {
    json request;
    try {
      request = json::parse(line);
    } catch (const json::parse_error&) {
      emit(json{{"error", "Could not parse json"}}.dump());
      return true;
    }
    const std::string id = request.value("id", std::string());
    if (id.empty()) {
      emit(json{{"error", "Request has no id"}}.dump());
      return true;
    }
    Query q;
    try {
      q = protocol::decode_request(request);
    } catch (const Error& e) {
      emit(protocol::encode_error(id, e.what()));
      return true;
    }
    const int length = static_cast<int>(q.moves.size());
    if (length == options_.crash_on_length) {
      out_.flush();
      std::_Exit(3);
    }
    if (length == options_.hang_on_length) return false;

    if (options_.max_delay_ms > 0) {
      std::uniform_int_distribution<int> delay(0, options_.max_delay_ms);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay(rng_)));
    }
    try {
      const PositionEval eval = respond_(q);
      const Color side = q.side_to_move();
      protocol::RootInfo root;
      // normalize_to_black is its own inverse.
      root.score_lead = normalize_to_black(eval.score_mean, options_.perspective, side);
      root.winrate = normalize_win_rate_to_black(eval.win_rate, options_.perspective, side);
      root.visits = eval.visits_used;
      emit(protocol::encode_result(id, root, length));
    } catch (const std::exception& e) {
      emit(protocol::encode_error(id, e.what()));
    }
    return true;
  }

  std::mt19937& rng() { return rng_; }

 private:
  void emit(const std::string& line) {
    out_ << line << '\n';
    out_.flush();
  }

  std::ostream& out_;
  const Responder& respond_;
  const MockServerOptions& options_;
  std::mt19937 rng_;
};

}  // namespace

void run_mock_server(std::istream& in, std::ostream& out, const Responder& respond,
                     const MockServerOptions& options) {
  Answerer answerer(out, respond, options);

  if (options.shuffle_window <= 1) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      answerer.answer(line);
    }
    return;
  }

  // Batch whatever arrives within a short idle window, then answer in random order.
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> queue;
  bool done = false;
  std::thread reader([&] {
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::lock_guard lock(mu);
      queue.push_back(line);
      cv.notify_one();
    }
    std::lock_guard lock(mu);
    done = true;
    cv.notify_one();
  });

  const auto idle = std::chrono::milliseconds(25);
  while (true) {
    std::vector<std::string> batch;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return done || !queue.empty(); });
      if (queue.empty() && done) break;
      while (static_cast<int>(queue.size()) < options.shuffle_window && !done) {
        const auto before = queue.size();
        cv.wait_for(lock, idle, [&] { return done || queue.size() > before; });
        if (queue.size() == before) break;
      }
      const auto take = std::min<size_t>(queue.size(), static_cast<size_t>(options.shuffle_window));
      batch.assign(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(take));
      queue.erase(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::shuffle(batch.begin(), batch.end(), answerer.rng());
    for (const auto& line : batch) answerer.answer(line);
  }
  reader.join();
}

}  // namespace copan::engine
