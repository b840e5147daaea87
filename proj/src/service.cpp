#include "copan/service.hpp"

#include <sys/socket.h>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "copan/error.hpp"
#include "copan/quality.hpp"

namespace copan::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

constexpr int kMinLiveFitPoints = 10;
constexpr size_t kBodyLimit = 8 * 1024 * 1024;

json error_json(const Error& e) {
  json j = {{"error", error_code_name(e.code())}, {"message", e.what()}};
  if (const auto* ee = dynamic_cast<const EngineError*>(&e); ee && ee->index()) j["index"] = *ee->index();
  return j;
}

}  // namespace

EnginePool::EnginePool(EngineFactory factory) : factory_(std::move(factory)) {}

std::shared_ptr<engine::Engine> EnginePool::acquire() {
  std::lock_guard lock(mu_);
  if (!current_) {
    if (!factory_) throw EngineError(ErrorCode::EngineCrashed, "no engine configured");
    current_ = factory_();
  }
  return current_;
}

void EnginePool::discard(const std::shared_ptr<engine::Engine>& engine) {
  std::lock_guard lock(mu_);
  if (current_ == engine) current_.reset();
}

LiveSession::LiveSession(EnginePool& pool, cop::EvalCache& cache, LiveOptions options)
    : pool_(pool), cache_(cache), options_(std::move(options)), board_(record_.board_size) {}

json LiveSession::handle_text(std::string_view text) {
  json message;
  try {
    message = json::parse(text);
  } catch (const json::exception& e) {
    return {{"error", error_code_name(ErrorCode::InvalidArgument)}, {"message", e.what()}};
  }
  return handle(message);
}

json LiveSession::handle(const json& message) {
  try {
    if (!message.is_object()) throw Error(ErrorCode::InvalidArgument, "message must be an object");
    if (message.contains("move")) return play(message.at("move"));
    if (message.contains("config")) return configure(message.at("config"));
    if (message.contains("reset")) return reset();
    throw Error(ErrorCode::InvalidArgument, "expected move, config or reset");
  } catch (const Error& e) {
    return error_json(e);
  } catch (const json::exception& e) {
    return {{"error", error_code_name(ErrorCode::InvalidArgument)}, {"message", e.what()}};
  }
}

json LiveSession::reset() {
  record_.moves.clear();
  board_ = sgf::Board(record_.board_size);
  x_.clear();
  costs_.clear();
  return {{"reset", true}};
}

json LiveSession::configure(const json& config) {
  if (!record_.moves.empty()) throw Error(ErrorCode::InvalidArgument, "config is only accepted before the first move");
  sgf::GameRecord next = record_;
  if (config.contains("boardSize")) next.board_size = config.at("boardSize").get<int>();
  if (config.contains("komi")) next.komi = config.at("komi").get<double>();
  if (config.contains("rules")) next.rules = config.at("rules").get<std::string>();
  if (next.board_size < sgf::kMinBoardSize || next.board_size > sgf::kMaxBoardSize)
    throw Error(ErrorCode::UnsupportedSize, "board size " + std::to_string(next.board_size) + " is not supported");
  record_ = std::move(next);
  reset();
  return {{"config", {{"boardSize", record_.board_size}, {"komi", record_.komi}, {"rules", record_.rules}}}};
}

json LiveSession::play(const json& move) {
  const auto color = parse_color(move.at("color").get<std::string>());
  if (!color) throw Error(ErrorCode::InvalidArgument, "bad color " + move.at("color").dump());
  const auto point = parse_vertex(move.at("vertex").get<std::string>(), record_.board_size);

  sgf::Board board = board_;
  if (point) board.place(*color, *point);
  sgf::GameRecord record = record_;
  record.moves.push_back(Move{*color, point});

  const size_t index = record.moves.size();
  auto engine = pool_.acquire();
  engine::PositionEval before;
  engine::PositionEval after;
  try {
    const auto query = cop::position_query(record, index, options_.visits);
    before = cache_.get_or_evaluate(*engine, query);
    after = cache_.get_or_evaluate(*engine, engine::with_pass(query));
  } catch (const EngineError& e) {
    if (e.code() == ErrorCode::EngineCrashed) pool_.discard(engine);
    throw e.at_index(static_cast<int>(index));
  }
  const double cost = cop::cost_of_passing(before.score_mean, after.score_mean, before.side_to_move);

  record_ = std::move(record);
  board_ = std::move(board);
  x_.push_back(static_cast<double>(index));
  costs_.push_back(cost);

  features::BaselineFit fit = options_.prior;
  if (costs_.size() >= kMinLiveFitPoints) {
    try {
      fit = features::fit_baseline(x_, costs_);
    } catch (const Error&) {
      // keep the prior
    }
  }
  const auto danger = report::danger_level(cost, fit, static_cast<int>(index), options_.danger);
  const double residual = cost - fit.at(static_cast<double>(index));
  return {
      {"index", index},
      {"cost", cost},
      {"dangerLevel", danger.level},
      {"sente", residual > features::default_tau(fit) ? "Gote" : "Sente"},
      {"sideToMove", std::string(1, color_char(before.side_to_move))},
  };
}

namespace {

enum class JobStatus { Pending, Done, Failed };

const char* status_name(JobStatus s) {
  switch (s) {
    case JobStatus::Pending: return "pending";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
  }
  return "pending";
}

struct Job {
  std::string id;
  sgf::GameRecord record;
  JobStatus status = JobStatus::Pending;
  std::string analysis;
  std::optional<std::string> features;
  std::optional<std::string> chart;
  json error;           // analysis failure
  json features_error;  // analysis succeeded but features could not be derived
  bool engine_failure = false;
};

struct Reply {
  http::status status;
  std::string body;
  std::string content_type = "application/json";
};

Reply json_reply(http::status status, const json& body) { return {status, body.dump(), "application/json"}; }

std::string mime_type(const std::filesystem::path& p) {
  static const std::map<std::string, std::string> types = {
      {".html", "text/html"}, {".js", "text/javascript"}, {".mjs", "text/javascript"},
      {".css", "text/css"},   {".json", "application/json"}, {".svg", "image/svg+xml"},
      {".png", "image/png"},  {".ico", "image/x-icon"},     {".map", "application/json"},
  };
  const auto it = types.find(p.extension().string());
  return it == types.end() ? "application/octet-stream" : it->second;
}

}  // namespace

struct Service::Impl : std::enable_shared_from_this<Service::Impl> {
  explicit Impl(ServiceOptions o) : options(std::move(o)), pool(options.engine_factory) {}

  ServiceOptions options;
  EnginePool pool;
  cop::EvalCache cache;

  asio::io_context ioc;
  std::optional<tcp::acceptor> acceptor;
  std::thread accept_thread;
  unsigned short bound_port = 0;

  std::mutex conn_mu;
  std::condition_variable conn_cv;
  std::set<int> open_fds;
  int active = 0;
  bool stopping = false;

  std::mutex job_mu;
  std::condition_variable job_cv;
  std::map<std::string, std::shared_ptr<Job>> jobs;
  std::deque<std::shared_ptr<Job>> queue;
  std::thread worker;
  std::uint64_t next_id = 1;

  void start() {
    beast::error_code ec;
    const auto address = asio::ip::make_address(options.address, ec);
    if (ec) throw Error(ErrorCode::InvalidArgument, "bad address " + options.address);
    acceptor.emplace(ioc);
    const tcp::endpoint endpoint(address, options.port);
    acceptor->open(endpoint.protocol(), ec);
    if (!ec) acceptor->set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor->bind(endpoint, ec);
    if (!ec) acceptor->listen(asio::socket_base::max_listen_connections, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot listen on " + options.address + ":" +
                                                std::to_string(options.port) + ": " + ec.message());
    bound_port = acceptor->local_endpoint().port();
    do_accept();
    accept_thread = std::thread([self = shared_from_this()] { self->ioc.run(); });
    worker = std::thread([self = shared_from_this()] { self->run_jobs(); });
  }

  void stop() {
    {
      std::lock_guard lock(conn_mu);
      if (stopping) return;
      stopping = true;
    }
    asio::post(ioc, [this] {
      beast::error_code ec;
      if (acceptor) acceptor->close(ec);
    });
    if (accept_thread.joinable()) accept_thread.join();
    {
      std::unique_lock lock(conn_mu);
      for (int fd : open_fds) ::shutdown(fd, SHUT_RDWR);
      conn_cv.wait(lock, [&] { return active == 0; });
    }
    {
      std::lock_guard lock(job_mu);
      job_cv.notify_all();
    }
    if (worker.joinable()) worker.join();
  }

  void do_accept() {
    acceptor->async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      {
        std::lock_guard lock(self->conn_mu);
        if (self->stopping) return;
        self->open_fds.insert(socket.native_handle());
        ++self->active;
      }
      std::thread([self, s = std::move(socket)]() mutable { self->serve_connection(std::move(s)); }).detach();
      self->do_accept();
    });
  }

  void serve_connection(tcp::socket socket) {
    const int fd = socket.native_handle();
    try {
      beast::flat_buffer buffer;
      for (;;) {
        http::request_parser<http::string_body> parser;
        parser.body_limit(kBodyLimit);
        beast::error_code ec;
        http::read(socket, buffer, parser, ec);
        if (ec) break;
        auto req = parser.release();
        if (websocket::is_upgrade(req)) {
          if (req.target() == "/live") {
            serve_live(std::move(socket), std::move(req));
            break;
          }
          write_reply(socket, req, json_reply(http::status::not_found, {{"error", "NotFound"}}), ec);
          break;
        }
        write_reply(socket, req, route(req), ec);
        if (ec || !req.keep_alive()) break;
      }
    } catch (const std::exception&) {
      // connection dropped
    }
    beast::error_code ignored;
    if (socket.is_open()) socket.shutdown(tcp::socket::shutdown_both, ignored);
    std::lock_guard lock(conn_mu);
    open_fds.erase(fd);
    --active;
    conn_cv.notify_all();
  }

  static void write_reply(tcp::socket& socket, const http::request<http::string_body>& req, const Reply& reply,
                          beast::error_code& ec) {
    http::response<http::string_body> res{reply.status, req.version()};
    res.set(http::field::server, "copan");
    res.set(http::field::content_type, reply.content_type);
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = reply.body;
    res.prepare_payload();
    http::write(socket, res, ec);
  }

  void serve_live(tcp::socket socket, http::request<http::string_body> req) {
    websocket::stream<tcp::socket> ws(std::move(socket));
    ws.accept(req);
    LiveSession session(pool, cache, [&] {
      LiveOptions o = options.live;
      o.visits = options.visits;
      return o;
    }());
    beast::flat_buffer buffer;
    for (;;) {
      beast::error_code ec;
      ws.read(buffer, ec);
      if (ec) break;
      const auto reply = session.handle_text(beast::buffers_to_string(buffer.data()));
      buffer.consume(buffer.size());
      ws.text(true);
      ws.write(asio::buffer(reply.dump()), ec);
      if (ec) break;
    }
  }

  Reply route(const http::request<http::string_body>& req) {
    std::string target(req.target());
    if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);

    if (target == "/games") {
      if (req.method() != http::verb::post) return json_reply(http::status::method_not_allowed, {{"error", "MethodNotAllowed"}});
      return submit(req.body());
    }
    if (target.rfind("/games/", 0) == 0) {
      if (req.method() != http::verb::get) return json_reply(http::status::method_not_allowed, {{"error", "MethodNotAllowed"}});
      const std::string rest = target.substr(7);
      const auto slash = rest.find('/');
      const std::string id = rest.substr(0, slash);
      const std::string what = slash == std::string::npos ? "" : rest.substr(slash + 1);
      return game_resource(id, what);
    }
    if (req.method() == http::verb::get && !options.static_dir.empty()) return static_file(target);
    return json_reply(http::status::not_found, {{"error", "NotFound"}});
  }

  Reply submit(const std::string& body) {
    auto job = std::make_shared<Job>();
    try {
      job->record = sgf::parse_sgf(body);
    } catch (const Error& e) {
      return json_reply(http::status::bad_request, error_json(e));
    }
    {
      std::lock_guard lock(job_mu);
      job->id = "g" + std::to_string(next_id++);
      jobs[job->id] = job;
      queue.push_back(job);
      job_cv.notify_all();
    }
    return json_reply(http::status::created, {{"id", job->id}, {"status", "pending"}});
  }

  Reply game_resource(const std::string& id, const std::string& what) {
    std::shared_ptr<Job> job;
    std::lock_guard lock(job_mu);
    if (const auto it = jobs.find(id); it != jobs.end()) job = it->second;
    if (!job) return json_reply(http::status::not_found, {{"error", "NotFound"}, {"message", "unknown game " + id}});
    if (what.empty()) return json_reply(http::status::ok, {{"id", id}, {"status", status_name(job->status)}});
    if (what != "analysis" && what != "features" && what != "chart")
      return json_reply(http::status::not_found, {{"error", "NotFound"}});
    if (job->status == JobStatus::Pending) return json_reply(http::status::accepted, {{"status", "pending"}});
    if (job->status == JobStatus::Failed)
      return json_reply(job->engine_failure ? http::status::bad_gateway : http::status::internal_server_error,
                        job->error);
    if (what == "analysis") return {http::status::ok, job->analysis};
    if (!job->features) return json_reply(http::status::unprocessable_entity, job->features_error);
    return {http::status::ok, what == "features" ? *job->features : *job->chart};
  }

  Reply static_file(const std::string& target) {
    namespace fs = std::filesystem;
    std::string rel = target == "/" ? "index.html" : target.substr(1);
    if (rel.find("..") != std::string::npos) return json_reply(http::status::not_found, {{"error", "NotFound"}});
    const fs::path path = fs::path(options.static_dir) / rel;
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) return json_reply(http::status::not_found, {{"error", "NotFound"}});
    try {
      return {http::status::ok, report::read_text_file(path.string()), mime_type(path)};
    } catch (const Error&) {
      return json_reply(http::status::not_found, {{"error", "NotFound"}});
    }
  }

  void run_jobs() {
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lock(job_mu);
        job_cv.wait(lock, [&] { return !queue.empty() || is_stopping(); });
        if (is_stopping()) return;
        job = queue.front();
        queue.pop_front();
      }
      analyze(*job);
    }
  }

  bool is_stopping() {
    std::lock_guard lock(conn_mu);
    return stopping;
  }

  void analyze(Job& job) {
    JobStatus status = JobStatus::Done;
    std::string analysis;
    std::optional<std::string> features_doc;
    std::optional<std::string> chart_doc;
    json error;
    json features_error;
    bool engine_failure = false;
    try {
      auto engine = pool.acquire();
      cop::SeriesOptions so;
      so.visits = options.visits;
      so.cache = &cache;
      cop::CopSeries series;
      try {
        series = cop::compute_series(job.record, *engine, so);
      } catch (const EngineError& e) {
        if (e.code() == ErrorCode::EngineCrashed) pool.discard(engine);
        throw;
      }
      analysis = report::analysis_to_json(series).dump();
      try {
        const auto f = features::analyze_features(series, options.features);
        features_doc = report::features_to_json(f).dump();
        chart_doc = report::render_chart(series, f.baseline, f.segments, f.stages).dump();
      } catch (const Error& e) {
        features_error = error_json(e);
      }
    } catch (const Error& e) {
      status = JobStatus::Failed;
      error = error_json(e);
      engine_failure = is_engine_error(e.code());
    } catch (const std::exception& e) {
      status = JobStatus::Failed;
      error = {{"error", "Internal"}, {"message", e.what()}};
    }
    std::lock_guard lock(job_mu);
    job.status = status;
    job.analysis = std::move(analysis);
    job.features = std::move(features_doc);
    job.chart = std::move(chart_doc);
    job.error = std::move(error);
    job.features_error = std::move(features_error);
    job.engine_failure = engine_failure;
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_shared<Impl>(std::move(options))) {}

Service::~Service() { stop(); }

void Service::start() { impl_->start(); }

unsigned short Service::port() const { return impl_->bound_port; }

void Service::stop() {
  if (impl_->acceptor) impl_->stop();
}

}  // namespace copan::service
