// Copyright 2026 the streamprofile authors
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

#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <sqlite3.h>

#include "streamprofile/core.hpp"
#include "streamprofile/filter.hpp"
#include "streamprofile/ingest.hpp"

namespace streamprofile::buffer {

struct PendingPost {
  Post post;
  bool valid = false;

  bool operator==(const PendingPost& o) const {
    return valid == o.valid && Json(post) == Json(o.post);
  }
};

struct Cursor {
  Timestamp timestamp{};
  std::string post_id;

  auto key() const { return std::tie(timestamp, post_id); }
  bool operator==(const Cursor&) const = default;
};

struct BufferState {
  std::string user_id;
  std::vector<PendingPost> pending;  // chronological
  std::size_t valid_count = 0;
  std::optional<Cursor> time_cursor;  // last emitted post
  std::size_t emitted_steps = 0;
  bool flagged = false;  // a batch failed the density re-audit

  bool operator==(const BufferState&) const = default;
};

struct PushReport {
  std::size_t accepted = 0;
  std::size_t duplicates = 0;  // post_id already pending or at/behind the cursor
  std::size_t reordered = 0;   // inserted before the pending tail
};

/// Appends posts in chronological order and updates the valid count.
/// Re-pushed posts are dropped by post_id; posts that arrive out of order are
/// insertion-sorted into the pending list.
inline BufferState push(BufferState state, const std::vector<Post>& posts, const PlatformProfile& profile,
                        PushReport* report = nullptr) {
  PushReport local;
  for (const auto& p : posts) {
    if (state.user_id.empty()) state.user_id = p.user_id;
    if (state.time_cursor && p.order_key() <= state.time_cursor->key()) {
      ++local.duplicates;
      continue;
    }
    bool pending_dup = std::any_of(state.pending.begin(), state.pending.end(),
                                   [&](const PendingPost& q) { return q.post.post_id == p.post_id; });
    if (pending_dup) {
      ++local.duplicates;
      continue;
    }
    PendingPost entry{p, filter::is_valid_post(p, profile)};
    const bool valid = entry.valid;
    if (!valid) entry.post.anchors.clear();
    if (!state.pending.empty() && chronological(p, state.pending.back().post)) {
      auto pos = std::upper_bound(state.pending.begin(), state.pending.end(), p,
                                  [](const Post& a, const PendingPost& b) { return chronological(a, b.post); });
      state.pending.insert(pos, std::move(entry));
      ++local.reordered;
    } else {
      state.pending.push_back(std::move(entry));
    }
    if (valid) ++state.valid_count;
    ++local.accepted;
  }
  if (report) *report = local;
  return state;
}

struct ReauditConfig {
  bool enabled = true;
};

struct PopResult {
  BufferState state;
  std::optional<StreamBatch> batch;
  std::optional<StreamBatch> discarded;  // emitted but failed the re-audit
};

inline double batch_density(const StreamBatch& b, const PlatformProfile& profile) {
  std::size_t valid = 0;
  std::size_t anchors = 0;
  for (const auto& p : b.posts) {
    if (!filter::is_valid_post(p, profile)) continue;
    ++valid;
    anchors += p.anchors.size();
  }
  return valid == 0 ? 0.0 : static_cast<double>(anchors) / static_cast<double>(valid);
}

/// Emits the oldest posts up to and including the min(valid, cap)-th valid
/// one once the trigger is reached.
inline PopResult try_pop(BufferState state, const PlatformProfile& profile, const ReauditConfig& reaudit = {}) {
  PopResult res;
  if (state.valid_count < profile.buffer_trigger) {
    res.state = std::move(state);
    return res;
  }
  const std::size_t take_valid = std::min(state.valid_count, profile.buffer_cap);
  std::size_t seen = 0;
  std::size_t cut = 0;
  while (cut < state.pending.size() && seen < take_valid) {
    if (state.pending[cut].valid) ++seen;
    ++cut;
  }
  StreamBatch batch;
  batch.user_id = state.user_id;
  for (std::size_t i = 0; i < cut; ++i) {
    auto& post = state.pending[i].post;
    for (const auto& a : post.anchors) {
      if (std::find(batch.anchors.begin(), batch.anchors.end(), a) == batch.anchors.end()) batch.anchors.push_back(a);
    }
    batch.posts.push_back(std::move(post));
  }
  batch.window_start = batch.posts.front().timestamp;
  batch.window_end = batch.posts.back().timestamp;
  state.pending.erase(state.pending.begin(), state.pending.begin() + static_cast<std::ptrdiff_t>(cut));
  state.valid_count -= take_valid;
  state.time_cursor = Cursor{batch.posts.back().timestamp, batch.posts.back().post_id};

  if (reaudit.enabled && !profile.density.contains(batch_density(batch, profile))) {
    state.flagged = true;
    res.discarded = std::move(batch);
  } else {
    batch.step_index = ++state.emitted_steps;
    res.batch = std::move(batch);
  }
  res.state = std::move(state);
  return res;
}

struct BufferRun {
  std::vector<StreamBatch> batches;
  std::size_t discarded = 0;
  BufferState final_state;
};

/// Replays a filtered stream one calendar day per push, popping after each.
inline BufferRun run_user(const UserStream& user, const PlatformProfile& profile, const ReauditConfig& reaudit = {},
                          BufferState state = {}) {
  BufferRun run;
  if (state.user_id.empty()) state.user_id = user.meta.user_id;
  std::size_t i = 0;
  while (i < user.posts.size()) {
    auto day = text::format_date(user.posts[i].timestamp);
    std::vector<Post> chunk;
    while (i < user.posts.size() && text::format_date(user.posts[i].timestamp) == day) chunk.push_back(user.posts[i++]);
    state = push(std::move(state), chunk, profile);
    while (true) {
      auto popped = try_pop(std::move(state), profile, reaudit);
      state = std::move(popped.state);
      if (popped.batch) {
        run.batches.push_back(std::move(*popped.batch));
      } else if (popped.discarded) {
        ++run.discarded;
      } else {
        break;
      }
    }
  }
  run.final_state = std::move(state);
  return run;
}

// Serialization ---------------------------------------------------------------

inline void to_json(Json& j, const BufferState& s) {
  Json pending = Json::array();
  for (const auto& p : s.pending) pending.push_back(Json{{"post", p.post}, {"valid", p.valid}});
  j = Json{{"user_id", s.user_id},
           {"pending", std::move(pending)},
           {"valid_count", s.valid_count},
           {"emitted_steps", s.emitted_steps},
           {"flagged", s.flagged}};
  if (s.time_cursor) {
    j["time_cursor"] = Json{{"timestamp", s.time_cursor->timestamp.time_since_epoch().count()},
                            {"post_id", s.time_cursor->post_id}};
  } else {
    j["time_cursor"] = nullptr;
  }
}

inline void from_json(const Json& j, BufferState& s) {
  s.user_id = j.at("user_id").get<std::string>();
  s.pending.clear();
  for (const auto& p : j.at("pending")) s.pending.push_back({p.at("post").get<Post>(), p.at("valid").get<bool>()});
  s.valid_count = j.at("valid_count").get<std::size_t>();
  s.emitted_steps = j.at("emitted_steps").get<std::size_t>();
  s.flagged = j.at("flagged").get<bool>();
  s.time_cursor.reset();
  if (const auto& c = j.at("time_cursor"); !c.is_null()) {
    s.time_cursor = Cursor{Timestamp{std::chrono::seconds{c.at("timestamp").get<std::int64_t>()}},
                           c.at("post_id").get<std::string>()};
  }
  auto valid = static_cast<std::size_t>(
      std::count_if(s.pending.begin(), s.pending.end(), [](const PendingPost& p) { return p.valid; }));
  if (valid != s.valid_count) throw DataError("buffer state valid_count mismatch for " + s.user_id);
}

/// Durable per-user buffer states in an SQLite file.
class BufferStore {
 public:
  static constexpr int kFormatVersion = 1;

  explicit BufferStore(const std::filesystem::path& path) : path_(path) {
    sqlite3* raw = nullptr;
    if (sqlite3_open_v2(path.c_str(), &raw, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) != SQLITE_OK) {
      std::string msg = raw ? sqlite3_errmsg(raw) : "out of memory";
      sqlite3_close(raw);
      throw DataError("cannot open buffer store " + path.string() + ": " + msg);
    }
    db_.reset(raw);
    exec("CREATE TABLE IF NOT EXISTS store_meta (key TEXT PRIMARY KEY, value TEXT NOT NULL)");
    exec("CREATE TABLE IF NOT EXISTS buffer_state (user_id TEXT PRIMARY KEY, payload TEXT NOT NULL)");
    auto version = meta("format_version");
    if (!version) {
      exec("INSERT INTO store_meta(key, value) VALUES ('format_version', '" + std::to_string(kFormatVersion) + "')");
    } else if (*version != std::to_string(kFormatVersion)) {
      corrupt("unsupported format version " + *version);
    }
  }

  void save(const BufferState& state) { save_all(std::vector<BufferState>{state}); }

  template <typename Range>
  void save_all(const Range& states) {
    exec("BEGIN IMMEDIATE");
    try {
      Statement st(db_.get(), "INSERT OR REPLACE INTO buffer_state(user_id, payload) VALUES (?, ?)", *this);
      for (const BufferState& s : states) {
        auto payload = Json(s).dump();
        sqlite3_reset(st.get());
        sqlite3_bind_text(st.get(), 1, s.user_id.c_str(), -1, SQLITE_TRANSIENT);
        sqlite3_bind_text(st.get(), 2, payload.c_str(), static_cast<int>(payload.size()), SQLITE_TRANSIENT);
        if (sqlite3_step(st.get()) != SQLITE_DONE) fail("write");
      }
      exec("COMMIT");
    } catch (...) {
      sqlite3_exec(db_.get(), "ROLLBACK", nullptr, nullptr, nullptr);
      throw;
    }
  }

  std::map<std::string, BufferState> load_all() const {
    std::map<std::string, BufferState> out;
    Statement st(db_.get(), "SELECT user_id, payload FROM buffer_state ORDER BY user_id", *this);
    int rc = 0;
    while ((rc = sqlite3_step(st.get())) == SQLITE_ROW) {
      std::string id = reinterpret_cast<const char*>(sqlite3_column_text(st.get(), 0));
      std::string payload = reinterpret_cast<const char*>(sqlite3_column_text(st.get(), 1));
      try {
        out.emplace(id, Json::parse(payload).get<BufferState>());
      } catch (const std::exception& e) {
        corrupt("state for " + id + ": " + e.what());
      }
    }
    if (rc != SQLITE_DONE) fail("read");
    return out;
  }

  std::optional<BufferState> load(const std::string& user_id) const {
    Statement st(db_.get(), "SELECT payload FROM buffer_state WHERE user_id = ?", *this);
    sqlite3_bind_text(st.get(), 1, user_id.c_str(), -1, SQLITE_TRANSIENT);
    if (sqlite3_step(st.get()) != SQLITE_ROW) return std::nullopt;
    try {
      return Json::parse(reinterpret_cast<const char*>(sqlite3_column_text(st.get(), 0))).get<BufferState>();
    } catch (const std::exception& e) {
      corrupt("state for " + user_id + ": " + e.what());
    }
  }

 private:
  struct DbClose {
    void operator()(sqlite3* db) const { sqlite3_close(db); }
  };

  class Statement {
   public:
    Statement(sqlite3* db, const std::string& sql, const BufferStore& owner) {
      if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK) owner.fail("prepare");
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;
    sqlite3_stmt* get() const { return stmt_; }

   private:
    sqlite3_stmt* stmt_ = nullptr;
  };

  std::optional<std::string> meta(const std::string& key) const {
    Statement st(db_.get(), "SELECT value FROM store_meta WHERE key = ?", *this);
    sqlite3_bind_text(st.get(), 1, key.c_str(), -1, SQLITE_TRANSIENT);
    if (sqlite3_step(st.get()) != SQLITE_ROW) return std::nullopt;
    return std::string(reinterpret_cast<const char*>(sqlite3_column_text(st.get(), 0)));
  }

  void exec(const std::string& sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_.get(), sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown error";
      sqlite3_free(err);
      corrupt(msg);
    }
  }

  [[noreturn]] void fail(const std::string& what) const { corrupt(what + ": " + sqlite3_errmsg(db_.get())); }

  [[noreturn]] void corrupt(const std::string& what) const {
    throw DataError("buffer store " + path_.string() + " is unusable (" + what +
                    "); move it aside and re-run the buffer stage from the filtered corpus to rebuild it");
  }

  std::filesystem::path path_;
  std::unique_ptr<sqlite3, DbClose> db_;
};

}  // namespace streamprofile::buffer
