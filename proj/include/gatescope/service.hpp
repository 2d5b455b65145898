#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gatescope/project.hpp"
#include "gatescope/simulator.hpp"

namespace gatescope {

/// Transport-independent reply. JSON bodies are wrapped in the protocol
/// envelope; text bodies (DOT, VCD) carry the revision in a header.
struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
  std::string text;
  std::string content_type = "application/json";
  std::uint64_t revision = 0;
};

struct ServiceRequest {
  std::string method;
  std::string path;  // without the /api/v1 prefix
  std::map<std::string, std::string> query;
  std::string body;
  std::string client;  // selection owner
};

struct SessionEvent {
  std::uint64_t sequence = 0;
  std::string type;  // mutation, task, result
  nlohmann::json data;
};

enum class TaskStatus { running, done, failed, cancelled, invalidated };
std::string to_string(TaskStatus s);

struct TaskInfo {
  std::uint64_t id = 0;
  std::string pass;
  TaskStatus status = TaskStatus::running;
  double progress = 0.0;
  std::uint64_t base_revision = 0;
  std::optional<std::uint64_t> committed_revision;
  std::string error;
};

/// One loaded project behind the wire protocol. Reads run concurrently,
/// mutations are serialized and each accepted mutation raises the revision
/// by one. Passes run on worker threads against a snapshot and commit
/// their result as a mutation unless the netlist changed meanwhile.
class Session {
 public:
  explicit Session(Project project, nlohmann::json config = nlohmann::json::object());
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  ServiceResponse handle(const ServiceRequest& request);
  /// Convenience overload; `query` is an `a=b&c=d` string.
  ServiceResponse handle(const std::string& method, const std::string& path, const nlohmann::json& body = nullptr,
                         const std::string& query = {}, const std::string& client = {});

  [[nodiscard]] std::uint64_t revision() const;
  [[nodiscard]] Project snapshot() const;

  /// Events with a sequence number above `after`, waiting up to `wait` for
  /// the first one. Empty when the session is shutting down or on timeout.
  std::vector<SessionEvent> events_after(std::uint64_t after, std::chrono::milliseconds wait);
  /// Blocks until no task is running.
  void wait_idle();
  /// Wakes event waiters; further waits return immediately.
  void shutdown();
  /// Runs on the worker thread after a pass finished, before its result is
  /// committed or discarded.
  void set_commit_hook(std::function<void(const TaskInfo&)> hook);

 private:
  struct Task;
  struct Simulation;

  ServiceResponse route(const ServiceRequest& request);
  ServiceResponse reply(nlohmann::json data, int status = 200) const;
  ServiceResponse reply_locked(nlohmann::json data, std::uint64_t revision, int status = 200) const;
  void publish(std::string type, nlohmann::json data);
  std::uint64_t commit_mutation(const std::string& op, nlohmann::json detail);

  ServiceResponse launch(const std::string& pass, const nlohmann::json& body);
  void run_task(std::shared_ptr<Task> task, Netlist netlist, std::map<std::string, nlohmann::json> prior,
                nlohmann::json config);
  nlohmann::json task_json(const Task& t) const;

  mutable std::shared_mutex state_mutex_;
  Project project_;
  nlohmann::json config_;
  std::uint64_t revision_ = 0;
  std::uint64_t netlist_revision_ = 0;  // last revision that changed the netlist
  std::map<std::string, nlohmann::json> selections_;

  std::mutex task_mutex_;
  std::condition_variable task_cv_;
  std::map<std::uint64_t, std::shared_ptr<Task>> tasks_;
  std::uint64_t next_task_ = 1;
  std::vector<std::thread> workers_;
  std::function<void(const TaskInfo&)> commit_hook_;

  std::mutex sim_mutex_;
  std::map<std::uint64_t, std::shared_ptr<const Simulation>> simulations_;
  std::uint64_t next_simulation_ = 1;

  std::mutex event_mutex_;
  std::condition_variable event_cv_;
  std::vector<SessionEvent> events_;
  std::uint64_t next_event_ = 1;
  bool closing_ = false;
};

/// HTTP transport for a Session: routes under /api/v1 plus the server-push
/// channel GET /api/v1/events (text/event-stream).
class Server {
 public:
  explicit Server(Session& session);
  ~Server();

  /// Binds to `host:port` (port 0 picks a free port) and returns the port.
  /// Throws Error on bind failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Splits `host:port`; throws Error when malformed.
std::pair<std::string, int> parse_bind_address(const std::string& text);

}  // namespace gatescope
