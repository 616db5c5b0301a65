#pragma once

// Dataset ingestion and run persistence.
//
// A run directory holds:
//   manifest.json   config snapshot, dataset checksum, seed, strategy, versions
//   events.log      append-only JSON lines, one event per line, each with "seq"
//   final_meta.txt  final meta-prompt text (LWE-family runs)
//   report.json     MetricReport of the finished run
//   .lock           held (flock) by the single writer
//
// Events between two commit points are one unit of work. Recovery drops an
// uncommitted tail, so a resumed run repeats at most the unit that was in
// flight and never re-judges a committed case.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lwe/core.hpp"
#include "lwe/digest.hpp"
#include "lwe/engine.hpp"
#include "lwe/events.hpp"
#include "lwe/metrics.hpp"
#include "lwe/serialize.hpp"
#include "lwe/simulator.hpp"

namespace lwe {

namespace fs = std::filesystem;

inline constexpr std::string_view kCodeVersion = "1.0.0";
inline constexpr int kManifestSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Errors.

class DatasetError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DatasetError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DatasetError("dataset line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DuplicateIdError : public DatasetError {
 public:
  explicit DuplicateIdError(const std::string& id) : DatasetError("duplicate case id '" + id + "'") {}
};

class BadGoldValueError : public DatasetError {
 public:
  BadGoldValueError(std::size_t line, const std::string& value)
      : DatasetError("dataset line " + std::to_string(line) + ": gold must be \"first\" or \"second\", got " + value) {}
};

class StorageError : public Error {
 public:
  using Error::Error;
};

class StorageFullError : public StorageError {
 public:
  explicit StorageFullError(const std::string& where) : StorageError("no space left on device: " + where) {}
};

class ManifestMismatchError : public StorageError {
 public:
  using StorageError::StorageError;
};

class CorruptLogError : public StorageError {
 public:
  CorruptLogError(std::uint64_t seq, const std::string& what)
      : StorageError("events.log corrupt at seq " + std::to_string(seq) + ": " + what), seq_(seq) {}
  std::uint64_t seq() const { return seq_; }

 private:
  std::uint64_t seq_;
};

class IncompleteRunError : public StorageError {
 public:
  explicit IncompleteRunError(const fs::path& dir) : StorageError("run is not complete: " + dir.string()) {}
};

// ---------------------------------------------------------------------------
// Datasets.

namespace detail {

inline std::string required_text(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing field '") + key + "'");
  if (!it->is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

inline ImageRef parse_image(const json& v, std::size_t line) {
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s.empty()) throw ParseError(line, "image reference is empty");
    const bool url = s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0 || s.rfind("data:", 0) == 0;
    return ImageRef{url ? ImageRef::Kind::Url : ImageRef::Kind::Path, std::move(s), {}};
  }
  if (v.is_object() && v.contains("base64")) {
    if (!v.at("base64").is_string()) throw ParseError(line, "image.base64 must be a string");
    auto media = v.value("media_type", std::string("image/png"));
    return ImageRef{ImageRef::Kind::Inline, v.at("base64").get<std::string>(), std::move(media)};
  }
  throw ParseError(line, "image must be a path, a URL, or {base64, media_type}");
}

// Uniform integer in [0, n) without modulo bias; independent of the standard
// library's distribution implementation so orders are portable.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

inline std::string run_key(std::uint64_t seed, std::uint64_t permutation_run) {
  return std::to_string(seed) + "|" + std::to_string(permutation_run);
}

}  // namespace detail

// Records in file order. Blank lines are skipped; line numbers are 1-based.
inline Dataset parse_dataset(std::istream& in) {
  Dataset out;
  std::set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, e.what());
    }
    if (!obj.is_object()) throw ParseError(line, "record must be an object");
    TestCase c;
    c.id = detail::required_text(obj, "id", line);
    c.question = detail::required_text(obj, "question", line);
    c.response_a = detail::required_text(obj, "response_a", line);
    c.response_b = detail::required_text(obj, "response_b", line);
    if (auto it = obj.find("image"); it != obj.end() && !it->is_null()) c.image = detail::parse_image(*it, line);
    if (auto it = obj.find("gold"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw BadGoldValueError(line, it->dump());
      c.gold = parse_preferred(it->get<std::string>());
      if (!c.gold) throw BadGoldValueError(line, it->dump());
    }
    try {
      validate(c);
    } catch (const InvariantError& e) {
      throw ParseError(line, e.what());
    }
    if (!seen.insert(c.id).second) throw DuplicateIdError(c.id);
    out.push_back(std::move(c));
  }
  return out;
}

inline Dataset read_dataset_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open dataset: " + path.string());
  return parse_dataset(in);
}

// SHA-256 over the text fields of the records in file order. Image bytes
// behind a path or URL are not read; only the reference is pinned.
inline std::string dataset_checksum(const Dataset& file_order) {
  Sha256 h;
  h.field("lwe-dataset-v1");
  for (const auto& c : file_order) {
    h.field(c.id).field(c.question).field(c.response_a).field(c.response_b);
    h.field(c.gold ? to_string(*c.gold) : "-");
    if (c.image) {
      h.field(c.image->kind == ImageRef::Kind::Path ? "path" : c.image->kind == ImageRef::Kind::Url ? "url" : "inline");
      h.field(c.image->value).field(c.image->media_type);
    } else {
      h.field("no-image");
    }
  }
  return h.hex();
}

inline std::string dataset_file_checksum(const fs::path& path) { return dataset_checksum(read_dataset_file(path)); }

// Processing order and presentation. Both are keyed by (seed,
// permutation_run): the order by a Fisher-Yates shuffle, the presentation by
// one keyed draw per case that decides whether the two responses trade places
// (gold follows its response).
inline Dataset prepare_dataset(Dataset records, std::uint64_t seed, std::optional<std::size_t> limit = std::nullopt,
                               std::uint64_t permutation_run = 0) {
  if (limit && *limit > records.size())
    throw DatasetError("limit " + std::to_string(*limit) + " exceeds record count " + std::to_string(records.size()));
  const auto key = detail::run_key(seed, permutation_run);
  std::mt19937_64 rng(splitmix64(fnv1a64("order|" + key)));
  for (std::size_t i = records.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(detail::bounded(rng, i));
    std::swap(records[i - 1], records[j]);
  }
  for (auto& c : records) {
    if (keyed_uniform(seed, "present|" + std::to_string(permutation_run) + "|" + c.id) < 0.5) {
      std::swap(c.response_a, c.response_b);
      if (c.gold) c.gold = other(*c.gold);
    }
  }
  if (limit) records.resize(*limit);
  return records;
}

inline Dataset load_dataset(const fs::path& path, std::uint64_t seed, std::optional<std::size_t> limit = std::nullopt,
                            std::uint64_t permutation_run = 0) {
  return prepare_dataset(read_dataset_file(path), seed, limit, permutation_run);
}

inline void write_dataset(std::ostream& out, const Dataset& dataset) {
  for (const auto& c : dataset) {
    json j{{"id", c.id}, {"question", c.question}, {"response_a", c.response_a}, {"response_b", c.response_b}};
    if (c.gold) j["gold"] = std::string(to_string(*c.gold));
    if (c.image) {
      if (c.image->kind == ImageRef::Kind::Inline) {
        j["image"] = json{{"base64", c.image->value}, {"media_type", c.image->media_type}};
      } else {
        j["image"] = c.image->value;
      }
    }
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Manifest.

struct Manifest {
  int schema_version = kManifestSchemaVersion;
  int event_schema_version = kEventSchemaVersion;
  std::string code_version{kCodeVersion};
  RunConfig config;
  std::string dataset_path;
  std::string dataset_checksum;
  std::uint64_t permutation_run = 0;
  std::optional<std::size_t> limit;
  json provider = json::object();
  json extra = json::object();  // free-form settings echoed by the front end

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

inline void to_json(json& j, const Manifest& m) {
  j = json{{"schema_version", m.schema_version},
           {"event_schema_version", m.event_schema_version},
           {"code_version", m.code_version},
           {"strategy", std::string(to_string(m.config.strategy))},
           {"seed", m.config.seed},
           {"config", m.config},
           {"dataset", {{"path", m.dataset_path}, {"checksum", m.dataset_checksum}}},
           {"permutation_run", m.permutation_run},
           {"provider", m.provider},
           {"extra", m.extra},
           {"choices",
            {{"swapped_judgment", "reuses the canonical evaluation prompt at judgment time"},
             {"presentation_randomization", "keyed by (seed, permutation_run, case id)"},
             {"consistency_rule", m.config.consistency_rule == ConsistencyRule::Canonical ? "canonical" : "literal"}}}};
  detail::put_opt(j, "limit", m.limit);
}

inline void from_json(const json& j, Manifest& m) {
  m.schema_version = j.at("schema_version").get<int>();
  m.event_schema_version = j.at("event_schema_version").get<int>();
  m.code_version = j.at("code_version").get<std::string>();
  m.config = j.at("config").get<RunConfig>();
  m.dataset_path = j.at("dataset").at("path").get<std::string>();
  m.dataset_checksum = j.at("dataset").at("checksum").get<std::string>();
  m.permutation_run = j.at("permutation_run").get<std::uint64_t>();
  m.limit = detail::get_opt<std::size_t>(j, "limit");
  m.provider = j.value("provider", json::object());
  m.extra = j.value("extra", json::object());
}

// Throws ManifestMismatchError naming every field that differs in a way that
// would change the run's outcome.
inline void check_manifest(const Manifest& stored, const Manifest& expected) {
  std::vector<std::string> diffs;
  if (stored.schema_version != expected.schema_version) diffs.push_back("schema_version");
  if (stored.event_schema_version != expected.event_schema_version) diffs.push_back("event_schema_version");
  if (stored.dataset_checksum != expected.dataset_checksum) diffs.push_back("dataset checksum");
  if (!(stored.config == expected.config)) diffs.push_back("config");
  if (stored.permutation_run != expected.permutation_run) diffs.push_back("permutation_run");
  if (stored.limit != expected.limit) diffs.push_back("limit");
  if (stored.provider != expected.provider) diffs.push_back("provider");
  if (diffs.empty()) return;
  std::string msg = "manifest mismatch:";
  for (const auto& d : diffs) msg += " " + d;
  throw ManifestMismatchError(msg);
}

// ---------------------------------------------------------------------------
// events.log reading.

struct LogEntry {
  std::uint64_t seq = 0;
  RunEvent event;
};

struct LogContents {
  std::vector<LogEntry> entries;   // every complete, well-formed line
  std::size_t committed = 0;       // entries[0, committed) end on a commit point
  std::uint64_t committed_bytes = 0;
  std::uint64_t total_bytes = 0;
};

inline LogContents read_log(const fs::path& path) {
  LogContents out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  out.total_bytes = data.size();
  std::size_t pos = 0;
  while (pos < data.size()) {
    const auto nl = data.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final write
    const std::uint64_t expect = out.entries.size();
    json j;
    try {
      j = json::parse(std::string_view(data).substr(pos, nl - pos));
    } catch (const json::parse_error& e) {
      throw CorruptLogError(expect, e.what());
    }
    LogEntry e;
    try {
      e.seq = j.at("seq").get<std::uint64_t>();
      e.event = event_from_json(j);
    } catch (const CorruptLogError&) {
      throw;
    } catch (const std::exception& ex) {
      throw CorruptLogError(expect, ex.what());
    }
    if (e.seq != expect) throw CorruptLogError(expect, "sequence number " + std::to_string(e.seq) + " out of order");
    const bool commit = is_commit_point(e.event);
    out.entries.push_back(std::move(e));
    pos = nl + 1;
    if (commit) {
      out.committed = out.entries.size();
      out.committed_bytes = pos;
    }
  }
  return out;
}

inline RunState replay(const std::vector<LogEntry>& entries, std::size_t count) {
  RunState s;
  for (std::size_t i = 0; i < count; ++i) {
    try {
      s.apply(entries[i].event);
    } catch (const Error& e) {
      throw CorruptLogError(entries[i].seq, std::string("replay failed: ") + e.what());
    }
  }
  return s;
}

inline RunState replay(const LogContents& log) { return replay(log.entries, log.committed); }

// ---------------------------------------------------------------------------
// Run directories.

class RunDirectory {
 public:
  enum class Mode { ReadOnly, Writer };

  static fs::path manifest_path(const fs::path& d) { return d / "manifest.json"; }
  static fs::path log_path(const fs::path& d) { return d / "events.log"; }
  static fs::path final_meta_path(const fs::path& d) { return d / "final_meta.txt"; }
  static fs::path report_path(const fs::path& d) { return d / "report.json"; }
  static fs::path lock_path(const fs::path& d) { return d / ".lock"; }

  static bool initialized(const fs::path& dir) { return fs::exists(manifest_path(dir)); }

  // Initializes an empty (or absent) directory for a new run.
  static RunDirectory create(const fs::path& dir, const Manifest& manifest, bool durable = true) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw StorageError("cannot create run directory " + dir.string() + ": " + ec.message());
    RunDirectory rd(dir, Mode::Writer, durable);
    if (initialized(dir)) throw StorageError("run directory already initialized: " + dir.string());
    if (fs::exists(log_path(dir)) && fs::file_size(log_path(dir)) > 0)
      throw StorageError("run directory has an events.log but no manifest: " + dir.string());
    rd.manifest_ = manifest;
    write_file_atomic(manifest_path(dir), json(manifest).dump(2) + "\n", durable);
    rd.open_log();
    return rd;
  }

  // Opens an existing run. Writers take the lock and drop an uncommitted tail.
  static RunDirectory open(const fs::path& dir, Mode mode = Mode::Writer, bool durable = true) {
    if (!initialized(dir)) throw StorageError("not a run directory (no manifest.json): " + dir.string());
    RunDirectory rd(dir, mode, durable);
    try {
      rd.manifest_ = json::parse(read_text(manifest_path(dir))).get<Manifest>();
    } catch (const std::exception& e) {
      throw ManifestMismatchError("unreadable manifest in " + dir.string() + ": " + e.what());
    }
    if (rd.manifest_.schema_version != kManifestSchemaVersion || rd.manifest_.event_schema_version != kEventSchemaVersion)
      throw ManifestMismatchError("unsupported schema version in " + dir.string());
    if (mode == Mode::Writer) {
      auto log = read_log(log_path(dir));
      if (log.committed_bytes != log.total_bytes) {
        if (::truncate(log_path(dir).c_str(), static_cast<off_t>(log.committed_bytes)) != 0)
          throw StorageError("cannot truncate events.log: " + std::string(std::strerror(errno)));
      }
      rd.next_seq_ = log.committed;
      rd.open_log();
    }
    return rd;
  }

  RunDirectory(RunDirectory&& o) noexcept { *this = std::move(o); }
  RunDirectory& operator=(RunDirectory&& o) noexcept {
    if (this != &o) {
      close();
      dir_ = std::move(o.dir_);
      mode_ = o.mode_;
      durable_ = o.durable_;
      manifest_ = std::move(o.manifest_);
      next_seq_ = o.next_seq_;
      lock_fd_ = std::exchange(o.lock_fd_, -1);
      log_fd_ = std::exchange(o.log_fd_, -1);
    }
    return *this;
  }
  RunDirectory(const RunDirectory&) = delete;
  RunDirectory& operator=(const RunDirectory&) = delete;
  ~RunDirectory() { close(); }

  const fs::path& path() const { return dir_; }
  const Manifest& manifest() const { return manifest_; }
  std::uint64_t next_sequence() const { return next_seq_; }

  void verify(const Manifest& expected) const { check_manifest(manifest_, expected); }

  // Appends one event and returns its sequence number. The line is written
  // with a single write(2) and flushed (fsync'd when durable).
  std::uint64_t append(const RunEvent& ev) {
    if (mode_ != Mode::Writer || log_fd_ < 0) throw StorageError("run directory not open for writing");
    const std::uint64_t seq = next_seq_;
    json j = event_to_json(ev);
    j["seq"] = seq;
    const std::string line = j.dump() + "\n";
    write_all(log_fd_, line, "events.log");
    if (durable_ && ::fsync(log_fd_) != 0) fail_io("events.log");
    ++next_seq_;
    return seq;
  }

  LogContents read() const { return read_log(log_path(dir_)); }
  RunState state() const { return replay(read()); }

  void write_final_meta(const std::string& text) const { write_file_atomic(final_meta_path(dir_), text, durable_); }
  void write_report(const json& report) const { write_file_atomic(report_path(dir_), report.dump(2) + "\n", durable_); }

  static std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw StorageError("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

 private:
  RunDirectory(fs::path dir, Mode mode, bool durable) : dir_(std::move(dir)), mode_(mode), durable_(durable) {
    if (mode_ == Mode::Writer) acquire_lock();
  }

  void acquire_lock() {
    lock_fd_ = ::open(lock_path(dir_).c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (lock_fd_ < 0) fail_io(".lock");
    if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(std::exchange(lock_fd_, -1));
      throw StorageError("run directory is locked by another writer: " + dir_.string());
    }
  }

  void open_log() {
    log_fd_ = ::open(log_path(dir_).c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (log_fd_ < 0) fail_io("events.log");
  }

  void close() {
    if (log_fd_ >= 0) ::close(std::exchange(log_fd_, -1));
    if (lock_fd_ >= 0) {
      ::flock(lock_fd_, LOCK_UN);
      ::close(std::exchange(lock_fd_, -1));
    }
  }

  [[noreturn]] static void fail_io(const std::string& what) {
    if (errno == ENOSPC || errno == EDQUOT) throw StorageFullError(what);
    throw StorageError(what + ": " + std::strerror(errno));
  }

  static void write_all(int fd, std::string_view data, const std::string& what) {
    while (!data.empty()) {
      const auto n = ::write(fd, data.data(), data.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        fail_io(what);
      }
      data.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  static void write_file_atomic(const fs::path& p, const std::string& content, bool durable) {
    const fs::path tmp = p.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) fail_io(tmp.string());
    try {
      write_all(fd, content, tmp.string());
      if (durable && ::fsync(fd) != 0) fail_io(tmp.string());
    } catch (...) {
      ::close(fd);
      throw;
    }
    ::close(fd);
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) throw StorageError("cannot write " + p.string() + ": " + ec.message());
  }

  fs::path dir_;
  Mode mode_ = Mode::ReadOnly;
  bool durable_ = true;
  Manifest manifest_;
  std::uint64_t next_seq_ = 0;
  int lock_fd_ = -1;
  int log_fd_ = -1;
};

// ---------------------------------------------------------------------------
// Runs backed by a directory.

struct ResumePoint {
  RunState state;
  bool complete = false;
  Phase phase = Phase::NotStarted;
  std::size_t next_unit = 0;
};

// Reconstructs M, F, S, I and the ledger from the committed log prefix.
inline ResumePoint resume_point(const RunDirectory& rd, const Manifest& expected) {
  rd.verify(expected);
  ResumePoint p;
  p.state = rd.state();
  p.complete = p.state.complete;
  p.phase = p.state.phase;
  p.next_unit = p.state.next_unit;
  return p;
}

inline json report_json(const RunResult& result) {
  json j{{"strategy", std::string(to_string(result.config.strategy))},
         {"metrics", compute_report(result)},
         {"total_chars", result.ledger.total_chars()},
         {"calls", result.ledger.size()}};
  json by_tag = json::object();
  const auto chars = result.ledger.chars_by_tag();
  for (auto tag : kAllCallTags) {
    auto it = chars.find(tag);
    by_tag[std::string(to_string(tag))] = it == chars.end() ? 0 : it->second;
  }
  j["chars_by_tag"] = std::move(by_tag);
  if (result.inconsistent_ids) j["inconsistent_cases"] = result.inconsistent_ids->size();
  if (result.meta_state) {
    j["refinements"] = result.meta_state->refinement_count;
    j["summarizations"] = result.meta_state->summarization_count;
  }
  j["warnings"] = result.warnings.size();
  return j;
}

inline void write_outputs(const RunDirectory& rd, const RunResult& result) {
  if (result.final_meta) rd.write_final_meta(*result.final_meta);
  rd.write_report(report_json(result));
}

struct RunSpec {
  fs::path out;
  Manifest manifest;
  Dataset dataset;  // prepared (ordered, presented, limited)
  std::optional<std::string> meta0;
  bool resume = false;
  bool durable = true;
  const std::atomic<bool>* stop = nullptr;
  std::function<void(const RunEvent&, const RunState&)> progress;
};

struct RunOutcome {
  RunResult result;
  bool already_complete = false;
};

// Runs (or resumes) a strategy with every event persisted before the next
// one is produced. Writes final_meta.txt and report.json on completion.
inline RunOutcome execute_run(Provider& provider, const TemplateStore& templates, const RunSpec& spec) {
  RunDirectory rd = [&] {
    if (spec.resume && RunDirectory::initialized(spec.out)) return RunDirectory::open(spec.out, RunDirectory::Mode::Writer, spec.durable);
    return RunDirectory::create(spec.out, spec.manifest, spec.durable);
  }();
  std::optional<RunState> resume;
  if (spec.resume) {
    rd.verify(spec.manifest);
    auto point = resume_point(rd, spec.manifest);
    if (point.complete) {
      auto result = to_result(point.state, spec.manifest.config);
      write_outputs(rd, result);
      return RunOutcome{std::move(result), true};
    }
    if (point.state.started) resume = std::move(point.state);
  }

  EngineOptions options;
  options.stop = spec.stop;
  Evaluator* self = nullptr;
  options.observer = [&](const RunEvent& ev) {
    rd.append(ev);
    if (spec.progress && self) spec.progress(ev, self->state());
  };
  std::optional<std::string> meta0 = spec.meta0;
  if (uses_meta_prompt(spec.manifest.config.strategy) && !meta0) meta0 = templates.text(TemplateId::InitialMetaPrompt);
  Evaluator evaluator(provider, templates, spec.manifest.config, std::move(options));
  self = &evaluator;
  auto result = evaluator.run(spec.dataset, std::move(meta0), std::move(resume));
  write_outputs(rd, result);
  return RunOutcome{std::move(result), false};
}

struct LoadedRun {
  Manifest manifest;
  RunState state;
  RunResult result;
};

// Read-only view of a run directory; safe while a writer is active.
inline LoadedRun load_run(const fs::path& dir, bool require_complete = true) {
  auto rd = RunDirectory::open(dir, RunDirectory::Mode::ReadOnly);
  LoadedRun r;
  r.manifest = rd.manifest();
  r.state = rd.state();
  if (require_complete && !r.state.complete) throw IncompleteRunError(dir);
  r.result = to_result(r.state, r.manifest.config);
  return r;
}

}  // namespace lwe
