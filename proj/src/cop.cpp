#include "copan/cop.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "copan/error.hpp"

namespace copan::cop {

double cost_of_passing(double mu_before, double mu_after_pass, Color side_to_move) {
  return sign(side_to_move) * (mu_before - mu_after_pass);
}

double effect(double mu_prev, double mu_next, Color mover) { return sign(mover) * (mu_next - mu_prev); }

double realized_value(double cost, double effect) { return cost + effect; }

std::vector<double> CopSeries::effects() const {
  std::vector<double> out;
  for (const auto& p : points)
    if (p.effect) out.push_back(*p.effect);
  return out;
}

engine::PositionEval EvalCache::get_or_evaluate(engine::Engine& engine, const engine::Query& query) {
  const std::string key = query.canonical_key();
  std::promise<engine::PositionEval> promise;
  {
    std::unique_lock lock(mu_);
    if (const auto it = entries_.find(key); it != entries_.end()) {
      ++hits_;
      auto fut = it->second;
      lock.unlock();
      return fut.get();
    }
    ++misses_;
    entries_.emplace(key, promise.get_future().share());
  }
  try {
    const auto eval = engine.evaluate(query);
    promise.set_value(eval);
    return eval;
  } catch (...) {
    {
      std::lock_guard lock(mu_);
      entries_.erase(key);
    }
    promise.set_exception(std::current_exception());
    throw;
  }
}

std::uint64_t EvalCache::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

std::uint64_t EvalCache::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

size_t EvalCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void EvalCache::clear() {
  std::lock_guard lock(mu_);
  entries_.clear();
  hits_ = 0;
  misses_ = 0;
}

engine::Query position_query(const sgf::GameRecord& record, size_t i, int visits) {
  engine::Query q;
  q.moves = sgf::position_prefix(record, i);
  q.initial_stones = record.handicap_stones;
  q.initial_player = record.moves.empty() ? record.first_to_move() : record.moves.front().color;
  q.komi = record.komi;
  q.board_size = record.board_size;
  q.rules = record.rules;
  q.visits = visits;
  return q;
}

namespace {

struct Task {
  size_t index;
  bool pass;
};

}  // namespace

CopSeries compute_series(const sgf::GameRecord& record, engine::Engine& engine,
                         const SeriesOptions& options) {
  if (options.visits < 1) throw Error(ErrorCode::InvalidArgument, "visits must be >= 1");
  const size_t n = record.moves.size();
  const size_t analyzed = options.include_terminal ? n + 1 : n;

  // mu(s_i) for i = 0..n (s_n only feeds the last move's effect), plus pass twins.
  std::vector<Task> tasks;
  for (size_t i = 0; i < analyzed || (n > 0 && i <= n); ++i) {
    tasks.push_back({i, false});
    if (i < analyzed) tasks.push_back({i, true});
  }

  std::vector<engine::PositionEval> before(n + 1);
  std::vector<engine::PositionEval> after_pass(analyzed);
  std::vector<std::exception_ptr> failures(tasks.size());

  auto run = [&](size_t t) {
    const Task& task = tasks[t];
    try {
      auto q = position_query(record, task.index, options.visits);
      if (task.pass) q = engine::with_pass(std::move(q));
      const auto eval = options.cache ? options.cache->get_or_evaluate(engine, q) : engine.evaluate(q);
      (task.pass ? after_pass : before)[task.index] = eval;
    } catch (...) {
      failures[t] = std::current_exception();
    }
  };

  const int workers = std::clamp(engine.max_in_flight(), 1, static_cast<int>(std::max<size_t>(tasks.size(), 1)));
  if (workers == 1) {
    for (size_t t = 0; t < tasks.size(); ++t) run(t);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (size_t t = next++; t < tasks.size(); t = next++) run(t);
      });
    for (auto& th : pool) th.join();
  }

  // Report the query that took the engine down if there is one, else the earliest failure.
  std::optional<size_t> reported;
  for (size_t t = 0; t < tasks.size(); ++t) {
    if (!failures[t]) continue;
    try {
      std::rethrow_exception(failures[t]);
    } catch (const EngineError& e) {
      if (e.caused_crash()) {
        reported = t;
        break;
      }
      if (!reported) reported = t;
    } catch (...) {
      if (!reported) reported = t;
    }
  }
  if (reported) {
    try {
      std::rethrow_exception(failures[*reported]);
    } catch (const EngineError& e) {
      throw e.at_index(static_cast<int>(tasks[*reported].index));
    }
  }

  CopSeries series;
  series.game = GameRef{record.board_size, record.komi, record.rules, static_cast<int>(n), record.metadata};
  series.engine = EngineRef{engine.describe(), options.visits};
  for (size_t i = 0; i < analyzed; ++i) {
    CopPoint p;
    p.index = static_cast<int>(i);
    p.side_to_move = before[i].side_to_move;
    p.score_mean_before = before[i].score_mean;
    p.score_mean_after_pass = after_pass[i].score_mean;
    p.cost = cost_of_passing(p.score_mean_before, p.score_mean_after_pass, p.side_to_move);
    p.win_rate = before[i].win_rate;
    if (i < n) {
      p.move = record.moves[i];
      p.effect = effect(before[i].score_mean, before[i + 1].score_mean, record.moves[i].color);
    }
    series.points.push_back(p);
  }
  return series;
}

}  // namespace copan::cop
