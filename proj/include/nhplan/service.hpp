#pragma once

#include "nhplan/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace nhplan {

/// data/residents_sample.csv of the source tree.
std::filesystem::path bundled_cohort_path();
Cohort bundled_cohort();

/// Fit on the cohort, transform the pool, optimize capacity and staffing.
/// The CLI and the HTTP service both go through here.
PlanResult execute_run(const RunRequest& request, const Cohort& cohort);

/// Per-day census and demand bands of an ensemble.
void write_band_csv(std::ostream& out, const std::vector<DemandTrace>& traces);

enum class RunStatus { queued, running, done, failed };
std::string_view to_token(RunStatus s);

struct RunRecord {
  std::string run_id;
  std::string created_at;  // UTC, ISO 8601
  Json request;
  RunStatus status = RunStatus::queued;
  std::map<std::string, std::string> artifacts;  // name -> path
  std::string error;
};

Json to_json(const RunRecord& r);

/// Run and cohort persistence: one directory per run holding request.json,
/// record.json and, once done, result.json, trace.csv and plan.csv.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);
  ~RunStore();
  RunStore(const RunStore&) = delete;
  RunStore& operator=(const RunStore&) = delete;

  /// Stores a validated cohort CSV. Throws CohortError on bad rows and
  /// std::logic_error when `id` is taken. An empty id is assigned.
  std::string add_cohort(const std::string& csv, std::string id = {});
  std::optional<Cohort> cohort(const std::string& id) const;

  /// Queues a run and starts it on its own thread.
  std::string submit(const RunRequest& request);
  std::optional<RunRecord> record(const std::string& id) const;
  std::optional<Json> result(const std::string& id) const;
  /// Blocks until the run leaves queued/running.
  void wait(const std::string& id);
  void wait_all();

  const std::filesystem::path& root() const { return root_; }

 private:
  void execute(std::string id, RunRequest request);
  void persist(const RunRecord& r) const;
  std::filesystem::path run_dir(const std::string& id) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::map<std::string, RunRecord> runs_;
  std::vector<std::thread> workers_;
  int next_run_ = 1;
  int next_cohort_ = 1;
};

/// Routes:
///   POST /cohorts[?id=name]   CSV body -> {"cohort_id"}; 409 on a taken id
///   POST /runs                run request JSON -> {"run_id"}
///   GET  /runs/{id}           run record, with the result summary once done
///   GET  /runs/{id}/trace     census/demand band CSV
///   GET  /scenarios/compare?ids=run1,run2  rows of finished runs
///   GET  /health
void install_routes(httplib::Server& server, RunStore& store);

/// Blocks serving on host:port.
int serve(RunStore& store, const std::string& host, int port);

}  // namespace nhplan
