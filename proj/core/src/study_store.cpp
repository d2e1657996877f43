// Copyright 2026 The DynEval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dyneval/study_store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <ctime>
#include <map>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dyneval/error.hpp"
#include "dyneval/hashing.hpp"
#include "dyneval/random.hpp"

namespace dyneval::study {

using nlohmann::json;

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS workers (
  worker_id TEXT PRIMARY KEY,
  mcq_score INTEGER NOT NULL,
  gold_correct INTEGER NOT NULL,
  passed INTEGER NOT NULL,
  approved_hits INTEGER NOT NULL DEFAULT 0,
  rejected_hits INTEGER NOT NULL DEFAULT 0);
CREATE TABLE IF NOT EXISTS payload_pairs (
  pair_id TEXT PRIMARY KEY,
  prompt_id TEXT NOT NULL,
  video_a TEXT NOT NULL,
  video_b TEXT NOT NULL,
  served INTEGER NOT NULL DEFAULT 0,
  accepted INTEGER NOT NULL DEFAULT 0);
CREATE TABLE IF NOT EXISTS gold_pairs (idx INTEGER PRIMARY KEY, body TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS sanity_items (idx INTEGER PRIMARY KEY, body TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS hits (
  hit_id TEXT PRIMARY KEY,
  worker_id TEXT NOT NULL,
  seed INTEGER NOT NULL,
  record TEXT NOT NULL,
  state TEXT NOT NULL,
  created_at INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS pages (
  hit_id TEXT NOT NULL,
  page_index INTEGER NOT NULL,
  page_id TEXT NOT NULL,
  role TEXT NOT NULL,
  pair_id TEXT NOT NULL,
  PRIMARY KEY (hit_id, page_index));
CREATE TABLE IF NOT EXISTS worker_pairs (
  worker_id TEXT NOT NULL,
  pair_id TEXT NOT NULL,
  PRIMARY KEY (worker_id, pair_id));
CREATE TABLE IF NOT EXISTS responses (
  hit_id TEXT PRIMARY KEY,
  worker_id TEXT NOT NULL,
  body TEXT NOT NULL,
  result TEXT NOT NULL,
  accepted INTEGER NOT NULL,
  compensation REAL NOT NULL,
  currency TEXT NOT NULL,
  created_at INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS votes (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  hit_id TEXT NOT NULL,
  pair_id TEXT NOT NULL,
  prompt_id TEXT NOT NULL,
  video_a TEXT NOT NULL,
  video_b TEXT NOT NULL,
  dimension TEXT NOT NULL,
  preferred TEXT NOT NULL);
)sql";

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw IoError(fmt::format("sqlite prepare: {}", sqlite3_errmsg(db)));
    }
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, const std::string& v) {
    check(sqlite3_bind_text(stmt_, i, v.c_str(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
    return *this;
  }
  Stmt& bind(int i, std::int64_t v) {
    check(sqlite3_bind_int64(stmt_, i, v));
    return *this;
  }
  Stmt& bind(int i, int v) { return bind(i, static_cast<std::int64_t>(v)); }
  Stmt& bind(int i, double v) {
    check(sqlite3_bind_double(stmt_, i, v));
    return *this;
  }

  // True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw IoError(fmt::format("sqlite step: {}", sqlite3_errmsg(db_)));
  }
  void run() {
    while (step()) {
    }
  }

  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p ? reinterpret_cast<const char*>(p) : "";
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
  sqlite3_stmt* handle() const { return stmt_; }

 private:
  void check(int rc) const {
    if (rc != SQLITE_OK) throw IoError(fmt::format("sqlite bind: {}", sqlite3_errmsg(db_)));
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

std::int64_t now() { return static_cast<std::int64_t>(std::time(nullptr)); }

}  // namespace

// Rolls back unless committed.
class StudyStore::Tx {
 public:
  explicit Tx(const StudyStore& s) : s_(s) { s_.exec("BEGIN IMMEDIATE"); }
  ~Tx() {
    if (!done_) {
      try {
        s_.exec("ROLLBACK");
      } catch (const std::exception& e) {
        spdlog::error("rollback failed: {}", e.what());
      }
    }
  }
  void commit() {
    s_.exec("COMMIT");
    done_ = true;
  }

 private:
  const StudyStore& s_;
  bool done_ = false;
};

json to_json(const WorkerRecord& w) {
  return {{"worker_id", w.worker_id},
          {"qualification", to_json(w.qualification)},
          {"approved_hits", w.approved_hits},
          {"rejected_hits", w.rejected_hits}};
}

StudyStore::StudyStore(const std::string& path, StoreOptions options)
    : options_(std::move(options)) {
  if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
    const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw IoError(fmt::format("cannot open study store {}: {}", path, msg));
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA foreign_keys = ON");
  exec(kSchema);
}

StudyStore::~StudyStore() { sqlite3_close(db_); }

void StudyStore::exec(const char* sql) const {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    const std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw IoError("sqlite: " + msg);
  }
}

void StudyStore::add_payload_pairs(const std::vector<StudyPair>& pairs) {
  std::lock_guard lock(mu_);
  Tx tx(*this);
  for (const auto& p : pairs) {
    Stmt s(db_,
           "INSERT OR IGNORE INTO payload_pairs (pair_id, prompt_id, video_a, video_b) "
           "VALUES (?, ?, ?, ?)");
    s.bind(1, p.pair_id).bind(2, p.prompt_id).bind(3, p.video_a).bind(4, p.video_b).run();
  }
  tx.commit();
}

void StudyStore::set_gold_pairs(const std::vector<GoldPair>& gold) {
  std::lock_guard lock(mu_);
  Tx tx(*this);
  exec("DELETE FROM gold_pairs");
  for (std::size_t i = 0; i < gold.size(); ++i) {
    Stmt(db_, "INSERT INTO gold_pairs (idx, body) VALUES (?, ?)")
        .bind(1, static_cast<int>(i))
        .bind(2, to_json(gold[i]).dump())
        .run();
  }
  tx.commit();
}

void StudyStore::set_sanity_items(const std::vector<SanityItem>& sanity) {
  std::lock_guard lock(mu_);
  Tx tx(*this);
  exec("DELETE FROM sanity_items");
  for (std::size_t i = 0; i < sanity.size(); ++i) {
    Stmt(db_, "INSERT INTO sanity_items (idx, body) VALUES (?, ?)")
        .bind(1, static_cast<int>(i))
        .bind(2, to_json(sanity[i]).dump())
        .run();
  }
  tx.commit();
}

void StudyStore::set_qualification_test(const QualificationTest& test) {
  test.validate();
  std::lock_guard lock(mu_);
  Stmt(db_, "INSERT OR REPLACE INTO meta (key, value) VALUES ('qualification', ?)")
      .bind(1, to_json(test).dump())
      .run();
}

std::optional<QualificationTest> StudyStore::qualification_test() const {
  std::lock_guard lock(mu_);
  Stmt st(db_, "SELECT value FROM meta WHERE key = 'qualification'");
  if (!st.step()) return std::nullopt;
  return qualification_test_from_json(json::parse(st.text(0)));
}

WorkerRecord StudyStore::record_qualification(const std::string& worker_id,
                                              const Qualification& q) {
  if (worker_id.empty()) throw InvalidInput("empty worker id");
  std::lock_guard lock(mu_);
  Stmt(db_,
       "INSERT INTO workers (worker_id, mcq_score, gold_correct, passed) VALUES (?, ?, ?, ?) "
       "ON CONFLICT(worker_id) DO UPDATE SET mcq_score = excluded.mcq_score, "
       "gold_correct = excluded.gold_correct, passed = excluded.passed")
      .bind(1, worker_id)
      .bind(2, q.mcq_score)
      .bind(3, q.gold_correct)
      .bind(4, q.passed ? 1 : 0)
      .run();
  Stmt st(db_, "SELECT approved_hits, rejected_hits FROM workers WHERE worker_id = ?");
  st.bind(1, worker_id);
  st.step();
  return {worker_id, q, static_cast<int>(st.integer(0)), static_cast<int>(st.integer(1))};
}

std::optional<WorkerRecord> StudyStore::worker(const std::string& worker_id) const {
  std::lock_guard lock(mu_);
  Stmt st(db_,
          "SELECT mcq_score, gold_correct, passed, approved_hits, rejected_hits FROM workers "
          "WHERE worker_id = ?");
  st.bind(1, worker_id);
  if (!st.step()) return std::nullopt;
  WorkerRecord w;
  w.worker_id = worker_id;
  w.qualification = {static_cast<int>(st.integer(0)), static_cast<int>(st.integer(1)),
                     st.integer(2) != 0};
  w.approved_hits = static_cast<int>(st.integer(3));
  w.rejected_hits = static_cast<int>(st.integer(4));
  return w;
}

Hit StudyStore::assign_hit(const std::string& worker_id) {
  std::lock_guard lock(mu_);
  {
    Stmt st(db_, "SELECT passed FROM workers WHERE worker_id = ?");
    st.bind(1, worker_id);
    if (!st.step() || st.integer(0) == 0) {
      throw InvalidInput(fmt::format("worker '{}' is not qualified", worker_id));
    }
  }
  Tx tx(*this);
  {
    Stmt st(db_, "SELECT record FROM hits WHERE worker_id = ? AND state = 'assigned'");
    st.bind(1, worker_id);
    if (st.step()) return hit_from_json(json::parse(st.text(0)));
  }
  std::int64_t counter = 0;
  {
    Stmt st(db_, "SELECT COUNT(*) FROM hits");
    st.step();
    counter = st.integer(0);
  }
  const std::uint64_t seed = mix_seed(options_.seed, static_cast<std::uint64_t>(counter));

  struct Candidate {
    std::uint64_t order;
    int served;
    StudyPair pair;
  };
  std::vector<Candidate> candidates;
  {
    Stmt st(db_,
            "SELECT pair_id, prompt_id, video_a, video_b, served FROM payload_pairs "
            "WHERE accepted < ? AND pair_id NOT IN "
            "(SELECT pair_id FROM worker_pairs WHERE worker_id = ?)");
    st.bind(1, options_.target_votes).bind(2, worker_id);
    while (st.step()) {
      StudyPair p{st.text(0), st.text(1), st.text(2), st.text(3)};
      const auto order = mix_seed(seed, stable_hash64(p.pair_id));
      candidates.push_back({order, static_cast<int>(st.integer(4)), std::move(p)});
    }
  }
  if (static_cast<int>(candidates.size()) < kPayloadPages) {
    throw InvalidInput(fmt::format("payload pool exhausted for worker '{}' ({} eligible pairs)",
                                   worker_id, candidates.size()));
  }
  // Least served first; the seeded order breaks ties.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.served != b.served) return a.served < b.served;
    if (a.order != b.order) return a.order < b.order;
    return a.pair.pair_id < b.pair.pair_id;
  });
  std::vector<StudyPair> payload;
  for (int i = 0; i < kPayloadPages; ++i) payload.push_back(candidates[i].pair);

  std::vector<GoldPair> gold;
  std::vector<SanityItem> sanity;
  {
    Stmt st(db_, "SELECT body FROM gold_pairs ORDER BY idx");
    while (st.step()) gold.push_back(gold_pair_from_json(json::parse(st.text(0))));
  }
  {
    Stmt st(db_, "SELECT body FROM sanity_items ORDER BY idx");
    while (st.step()) sanity.push_back(sanity_item_from_json(json::parse(st.text(0))));
  }
  const std::string hit_id = "hit-" + sha256_hex(fmt::format("{}/{}", seed, counter)).substr(0, 12);
  Hit hit = assemble_hit(payload, gold, sanity, seed, hit_id);

  Stmt(db_,
       "INSERT INTO hits (hit_id, worker_id, seed, record, state, created_at) "
       "VALUES (?, ?, ?, ?, 'assigned', ?)")
      .bind(1, hit.hit_id)
      .bind(2, worker_id)
      .bind(3, static_cast<std::int64_t>(seed))
      .bind(4, to_json(hit).dump())
      .bind(5, now())
      .run();
  for (std::size_t i = 0; i < hit.pages.size(); ++i) {
    const Page& p = hit.pages[i];
    const char* role = p.role == PageRole::payload  ? "payload"
                       : p.role == PageRole::repeat ? "repeat"
                       : p.role == PageRole::gold   ? "gold"
                                                    : "sanity";
    Stmt(db_,
         "INSERT INTO pages (hit_id, page_index, page_id, role, pair_id) VALUES (?, ?, ?, ?, ?)")
        .bind(1, hit.hit_id)
        .bind(2, static_cast<int>(i))
        .bind(3, p.page_id)
        .bind(4, std::string(role))
        .bind(5, p.pair.pair_id)
        .run();
  }
  for (const auto& p : payload) {
    Stmt(db_, "INSERT OR IGNORE INTO worker_pairs (worker_id, pair_id) VALUES (?, ?)")
        .bind(1, worker_id)
        .bind(2, p.pair_id)
        .run();
    Stmt(db_, "UPDATE payload_pairs SET served = served + 1 WHERE pair_id = ?")
        .bind(1, p.pair_id)
        .run();
  }
  tx.commit();
  return hit;
}

std::optional<Hit> StudyStore::find_hit(const std::string& hit_id) const {
  std::lock_guard lock(mu_);
  Stmt st(db_, "SELECT record FROM hits WHERE hit_id = ?");
  st.bind(1, hit_id);
  if (!st.step()) return std::nullopt;
  return hit_from_json(json::parse(st.text(0)));
}

HitResponse StudyStore::submit_response(const std::string& hit_id,
                                        const ResponseSubmission& response) {
  std::lock_guard lock(mu_);
  Tx tx(*this);
  std::string owner;
  Hit hit;
  {
    Stmt st(db_, "SELECT worker_id, record FROM hits WHERE hit_id = ?");
    st.bind(1, hit_id);
    if (!st.step()) throw InvalidInput("unknown HIT " + hit_id);
    owner = st.text(0);
    hit = hit_from_json(json::parse(st.text(1)));
  }
  if (owner != response.worker_id) {
    throw InvalidInput(fmt::format("HIT {} is not assigned to '{}'", hit_id, response.worker_id));
  }
  {
    // A repeated submission gets the original receipt: the stored body is
    // rescored, which is deterministic and restores the vote list.
    Stmt st(db_, "SELECT body FROM responses WHERE hit_id = ?");
    st.bind(1, hit_id);
    if (st.step()) return score_response(hit, submission_from_json(json::parse(st.text(0))));
  }
  HitResponse result = score_response(hit, response);
  const double pay = result.accepted ? options_.compensation_per_hit : 0.0;
  Stmt(db_,
       "INSERT INTO responses (hit_id, worker_id, body, result, accepted, compensation, "
       "currency, created_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?)")
      .bind(1, hit_id)
      .bind(2, response.worker_id)
      .bind(3, to_json(response).dump())
      .bind(4, to_json(result).dump())
      .bind(5, result.accepted ? 1 : 0)
      .bind(6, pay)
      .bind(7, options_.currency)
      .bind(8, now())
      .run();
  Stmt(db_, "UPDATE hits SET state = 'submitted' WHERE hit_id = ?").bind(1, hit_id).run();
  Stmt(db_,
       result.accepted
           ? "UPDATE workers SET approved_hits = approved_hits + 1 WHERE worker_id = ?"
           : "UPDATE workers SET rejected_hits = rejected_hits + 1 WHERE worker_id = ?")
      .bind(1, response.worker_id)
      .run();
  std::set<std::string> counted;
  for (const auto& v : result.votes) {
    Stmt(db_,
         "INSERT INTO votes (hit_id, pair_id, prompt_id, video_a, video_b, dimension, preferred) "
         "VALUES (?, ?, ?, ?, ?, ?, ?)")
        .bind(1, hit_id)
        .bind(2, v.pair.pair_id)
        .bind(3, v.pair.prompt_id)
        .bind(4, v.pair.video_a)
        .bind(5, v.pair.video_b)
        .bind(6, to_string(v.dimension))
        .bind(7, std::string(v.preferred == Choice::a ? "a" : "b"))
        .run();
    if (counted.insert(v.pair.pair_id).second) {
      Stmt(db_, "UPDATE payload_pairs SET accepted = accepted + 1 WHERE pair_id = ?")
          .bind(1, v.pair.pair_id)
          .run();
    }
  }
  tx.commit();
  return result;
}

std::vector<Annotation> StudyStore::export_annotations() const {
  std::lock_guard lock(mu_);
  std::vector<RecordedVote> votes;
  Stmt st(db_,
          "SELECT pair_id, prompt_id, video_a, video_b, dimension, preferred FROM votes "
          "ORDER BY id");
  while (st.step()) {
    RecordedVote v;
    v.pair = {st.text(0), st.text(1), st.text(2), st.text(3)};
    v.dimension = parse_dimension(st.text(4));
    v.preferred = st.text(5) == "a" ? Choice::a : Choice::b;
    votes.push_back(std::move(v));
  }
  return votes_to_annotations(votes);
}

std::vector<std::pair<std::string, int>> StudyStore::serve_counts() const {
  std::lock_guard lock(mu_);
  std::vector<std::pair<std::string, int>> out;
  Stmt st(db_, "SELECT pair_id, served FROM payload_pairs ORDER BY pair_id");
  while (st.step()) out.emplace_back(st.text(0), static_cast<int>(st.integer(1)));
  return out;
}

json StudyStore::stats() const {
  std::lock_guard lock(mu_);
  auto count = [&](const char* sql) {
    Stmt st(db_, sql);
    st.step();
    return st.integer(0);
  };
  return {{"workers", count("SELECT COUNT(*) FROM workers")},
          {"qualified_workers", count("SELECT COUNT(*) FROM workers WHERE passed = 1")},
          {"payload_pairs", count("SELECT COUNT(*) FROM payload_pairs")},
          {"complete_pairs", count(fmt::format("SELECT COUNT(*) FROM payload_pairs WHERE "
                                               "accepted >= {}",
                                               options_.target_votes)
                                       .c_str())},
          {"hits", count("SELECT COUNT(*) FROM hits")},
          {"accepted_hits", count("SELECT COUNT(*) FROM responses WHERE accepted = 1")},
          {"rejected_hits", count("SELECT COUNT(*) FROM responses WHERE accepted = 0")},
          {"votes", count("SELECT COUNT(*) FROM votes")},
          {"compensation", [&] {
             Stmt st(db_, "SELECT COALESCE(SUM(compensation), 0.0) FROM responses");
             st.step();
             return sqlite3_column_double(st.handle(), 0);
           }()},
          {"currency", options_.currency}};
}

}  // namespace dyneval::study
