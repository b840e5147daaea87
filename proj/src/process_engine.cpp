#include "copan/process_engine.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <atomic>
#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <semaphore>
#include <thread>

#include "copan/error.hpp"
#include "copan/protocol.hpp"

extern char** environ;

namespace copan::engine {

namespace {

struct Child {
  pid_t pid = -1;
  int to_child = -1;    // child's stdin
  int from_child = -1;  // child's stdout
};

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

Child spawn(const std::vector<std::string>& command, const std::string& log_path) {
  if (command.empty()) throw EngineError(ErrorCode::EngineCrashed, "empty engine command");
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw EngineError(ErrorCode::EngineCrashed, "pipe failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw EngineError(ErrorCode::EngineCrashed, "pipe failed");
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, log_path.c_str(),
                                   O_WRONLY | O_CREAT | O_APPEND, 0644);

  std::vector<char*> argv;
  for (const auto& a : command) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw EngineError(ErrorCode::EngineCrashed,
                      "cannot start engine '" + command.front() + "': " + std::strerror(rc));
  }
  return Child{pid, in_pipe[1], out_pipe[0]};
}

void write_all(int fd, const std::string& data) {
  size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return;  // EPIPE: the reader notices the dead child
    }
    off += static_cast<size_t>(n);
  }
}

class LineReader {
 public:
  void reset(int fd) {
    fd_ = fd;
    buf_.clear();
  }

  std::optional<std::string> next() {
    while (true) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(fd_, chunk, sizeof(chunk));
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      buf_.append(chunk, static_cast<size_t>(n));
    }
  }

 private:
  int fd_ = -1;
  std::string buf_;
};

std::string default_log_path() {
  return (std::filesystem::temp_directory_path() /
          ("copan-engine-" + std::to_string(::getpid()) + ".log"))
      .string();
}

}  // namespace

struct ProcessEngine::Impl {
  struct Pending {
    std::string line;
    std::uint64_t seq = 0;
    bool written = false;
    Color side_to_move = Color::Black;
    std::promise<PositionEval> promise;
  };

  explicit Impl(EngineConfig cfg)
      : config(std::move(cfg)), slots(std::max(config.max_in_flight, 1)) {
    if (config.visits < 1) throw Error(ErrorCode::InvalidArgument, "visits must be >= 1");
    if (config.max_in_flight < 1) throw Error(ErrorCode::InvalidArgument, "max_in_flight must be >= 1");
    if (config.stderr_log.empty()) config.stderr_log = default_log_path();
    ignore_sigpipe();
    child = spawn(config.command, config.stderr_log);
    live_pid = child.pid;
    lines.reset(child.from_child);
    reader = std::thread([this] { read_loop(); });
  }

  ~Impl() {
    {
      std::lock_guard lock(mu);
      stopping = true;
    }
    pid_t pid = -1;
    {
      // A replay in progress holds write_mu while blocked on the engine; kill it loose.
      std::unique_lock wlock(write_mu, std::defer_lock);
      for (int i = 0; i < 200 && !wlock.try_lock(); ++i)
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      if (!wlock.owns_lock()) {
        if (const pid_t live = live_pid.load(); live > 0) ::kill(live, SIGKILL);
        wlock.lock();
      }
      if (child.to_child >= 0) ::close(child.to_child);
      child.to_child = -1;
      pid = child.pid;
    }
    if (pid > 0) {
      int status = 0;
      bool reaped = false;
      for (int i = 0; i < 200 && !reaped; ++i) {
        if (::waitpid(pid, &status, WNOHANG) == pid) reaped = true;
        else std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      if (!reaped) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
      }
    }
    if (reader.joinable()) reader.join();
    std::lock_guard lock(mu);
    fail_all_locked(ErrorCode::EngineCrashed, "engine shut down", {});
    if (child.from_child >= 0) ::close(child.from_child);
  }

  std::pair<std::string, std::future<PositionEval>> submit(const Query& query) {
    std::future<PositionEval> fut;
    std::string id;
    {
      std::lock_guard lock(mu);
      if (dead) throw EngineError(ErrorCode::EngineCrashed, "engine is not running");
      const std::uint64_t seq = next_seq++;
      id = "q" + std::to_string(seq);
      Pending p;
      p.line = protocol::encode_request(id, query).dump() + "\n";
      p.seq = seq;
      p.side_to_move = query.side_to_move();
      fut = p.promise.get_future();
      pending.emplace(id, std::move(p));
    }
    std::lock_guard wlock(write_mu);
    flush_unwritten_wlocked();
    return {id, std::move(fut)};
  }

  // Caller holds write_mu.
  void flush_unwritten_wlocked() {
    std::vector<std::string> out;
    int fd = -1;
    {
      std::lock_guard lock(mu);
      if (replaying || dead || stopping) return;
      std::map<std::uint64_t, Pending*> order;
      for (auto& [id, p] : pending)
        if (!p.written) order.emplace(p.seq, &p);
      for (auto& [seq, p] : order) {
        p->written = true;
        out.push_back(p->line);
      }
      fd = child.to_child;
    }
    for (const auto& line : out) write_all(fd, line);
  }

  void forget(const std::string& id) {
    std::lock_guard lock(mu);
    pending.erase(id);
  }

  // Caller holds mu.
  void fail_all_locked(ErrorCode code, const std::string& why, const std::string& culprit) {
    for (auto& [id, p] : pending) {
      const bool is_culprit = id == culprit;
      const std::string msg = is_culprit ? "engine crashed again after restart while answering this query"
                                         : why;
      p.promise.set_exception(std::make_exception_ptr(EngineError(code, msg, is_culprit)));
    }
    pending.clear();
  }

  void dispatch(const std::string& line) {
    protocol::Response r;
    try {
      r = protocol::decode_response(line);
    } catch (const EngineError& e) {
      std::lock_guard lock(mu);
      fail_all_locked(ErrorCode::ProtocolError, e.what(), {});
      return;
    }
    if (r.kind == protocol::Response::Kind::Warning || r.kind == protocol::Response::Kind::Unattributed)
      return;
    std::lock_guard lock(mu);
    const auto it = pending.find(r.id);
    if (it == pending.end()) return;  // timed out earlier, or a duplicate
    auto& p = it->second;
    if (r.kind == protocol::Response::Kind::Error) {
      p.promise.set_exception(std::make_exception_ptr(
          EngineError(ErrorCode::EngineRejectedQuery, "engine rejected query: " + r.message)));
    } else if (!(r.root.winrate >= 0.0 && r.root.winrate <= 1.0)) {
      p.promise.set_exception(std::make_exception_ptr(
          EngineError(ErrorCode::ProtocolError, "win rate out of range in response " + r.id)));
    } else {
      const Perspective persp = config.reporting_perspective;
      p.promise.set_value(PositionEval{normalize_to_black(r.root.score_lead, persp, p.side_to_move),
                                       normalize_win_rate_to_black(r.root.winrate, persp, p.side_to_move),
                                       std::max(r.root.visits, 1), p.side_to_move});
      restart_armed = true;
    }
    pending.erase(it);
  }

  void reap_wlocked() {
    if (child.to_child >= 0) ::close(child.to_child);
    if (child.from_child >= 0) ::close(child.from_child);
    if (child.pid > 0) {
      int status = 0;
      if (::waitpid(child.pid, &status, WNOHANG) == 0) {
        ::kill(child.pid, SIGKILL);
        ::waitpid(child.pid, &status, 0);
      }
    }
    child = Child{};
    live_pid = -1;
  }

  // Returns true when reading should continue with a fresh engine.
  bool handle_crash() {
    std::lock_guard wlock(write_mu);
    std::vector<std::pair<std::uint64_t, std::string>> replay;
    {
      std::lock_guard lock(mu);
      if (stopping) return false;
    }
    reap_wlocked();
    {
      std::lock_guard lock(mu);
      if (!restart_armed) {
        dead = true;
        fail_all_locked(ErrorCode::EngineCrashed, "engine process exited", {});
        return false;
      }
      restart_armed = false;
      replaying = true;
      ++restart_count;
      for (auto& [id, p] : pending) replay.emplace_back(p.seq, id);
    }
    std::sort(replay.begin(), replay.end());
    try {
      child = spawn(config.command, config.stderr_log);
      live_pid = child.pid;
    } catch (const EngineError& e) {
      std::lock_guard lock(mu);
      dead = true;
      fail_all_locked(ErrorCode::EngineCrashed, e.what(), {});
      return false;
    }
    lines.reset(child.from_child);

    for (const auto& [seq, id] : replay) {
      std::string line;
      {
        std::lock_guard lock(mu);
        const auto it = pending.find(id);
        if (it == pending.end()) continue;
        it->second.written = true;
        line = it->second.line;
      }
      write_all(child.to_child, line);
      while (true) {
        const auto got = lines.next();
        if (!got) {
          reap_wlocked();
          std::lock_guard lock(mu);
          dead = true;
          fail_all_locked(ErrorCode::EngineCrashed, "engine crashed again after restart", id);
          return false;
        }
        dispatch(*got);
        std::lock_guard lock(mu);
        if (!pending.count(id)) break;
      }
    }
    {
      std::lock_guard lock(mu);
      replaying = false;
    }
    flush_unwritten_wlocked();
    return true;
  }

  void read_loop() {
    while (true) {
      const auto line = lines.next();
      if (line) {
        if (line->find_first_not_of(" \t") != std::string::npos) dispatch(*line);
        continue;
      }
      if (!handle_crash()) return;
    }
  }

  EngineConfig config;
  std::counting_semaphore<4096> slots;

  std::mutex mu;  // pending, flags
  std::map<std::string, Pending> pending;
  std::uint64_t next_seq = 0;
  bool stopping = false;
  bool dead = false;
  bool replaying = false;
  bool restart_armed = true;
  int restart_count = 0;

  std::mutex write_mu;  // child fds and writes
  Child child;
  std::atomic<pid_t> live_pid{-1};

  LineReader lines;  // reader thread only
  std::thread reader;
};

ProcessEngine::ProcessEngine(EngineConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

ProcessEngine::~ProcessEngine() = default;

int ProcessEngine::max_in_flight() const { return impl_->config.max_in_flight; }

std::string ProcessEngine::describe() const {
  std::string s;
  for (const auto& a : impl_->config.command) {
    if (!s.empty()) s += ' ';
    s += a;
  }
  return s;
}

const EngineConfig& ProcessEngine::config() const { return impl_->config; }

int ProcessEngine::restarts() const {
  std::lock_guard lock(impl_->mu);
  return impl_->restart_count;
}

bool ProcessEngine::alive() const {
  std::lock_guard lock(impl_->mu);
  return !impl_->dead;
}

const std::string& ProcessEngine::stderr_log() const { return impl_->config.stderr_log; }

PositionEval ProcessEngine::do_evaluate(const Query& query) {
  impl_->slots.acquire();
  struct Release {
    std::counting_semaphore<4096>& s;
    ~Release() { s.release(); }
  } release{impl_->slots};

  auto [id, fut] = impl_->submit(query);
  if (fut.wait_for(impl_->config.timeout) == std::future_status::timeout) {
    impl_->forget(id);
    throw EngineError(ErrorCode::QueryTimeout, "no engine response within " +
                                                   std::to_string(impl_->config.timeout.count()) + " s");
  }
  return fut.get();
}

std::vector<std::string> split_command(std::string_view command) {
  std::vector<std::string> out;
  std::string cur;
  bool in_token = false;
  char quote = 0;
  for (size_t i = 0; i < command.size(); ++i) {
    const char c = command[i];
    if (quote) {
      if (c == quote) quote = 0;
      else if (c == '\\' && quote == '"' && i + 1 < command.size()) cur += command[++i];
      else cur += c;
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      in_token = true;
    } else if (c == '\\' && i + 1 < command.size()) {
      cur += command[++i];
      in_token = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_token) out.push_back(std::move(cur));
      cur.clear();
      in_token = false;
    } else {
      cur += c;
      in_token = true;
    }
  }
  if (quote) throw Error(ErrorCode::InvalidArgument, "unterminated quote in engine command");
  if (in_token) out.push_back(std::move(cur));
  return out;
}

}  // namespace copan::engine
