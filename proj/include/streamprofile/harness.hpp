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
#include <atomic>
#include <chrono>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "streamprofile/buffer.hpp"
#include "streamprofile/chat.hpp"
#include "streamprofile/core.hpp"
#include "streamprofile/io.hpp"
#include "streamprofile/tasks.hpp"

namespace streamprofile::harness {

struct PlatformContext {
  std::string name;
  std::string description;
  std::string tag_meaning;
  std::string analysis_hint;
};

inline const std::map<std::string, PlatformContext>& platform_contexts() {
  static const std::map<std::string, PlatformContext> table{
      {"weibo",
       {"Weibo", "A Chinese microblog platform; users engage with topics through posts, reposts and comments.",
        "A tag is a #hashtag# used when posting or reposting, reflecting the user's current focus (trends, "
        "celebrity fandom, daily-life topics).",
        "Distinguish long-term interests (e.g. a celebrity the user consistently follows) from transient trends "
        "(e.g. breaking news). Reposts often signal real interest more faithfully than original posts."}},
      {"xiaohongshu",
       {"Xiaohongshu",
        "A lifestyle-sharing platform; users publish image/video notes on beauty, fashion, food, travel, "
        "parenting, etc.",
        "A tag is a topic label attached to a note, reflecting the user's content-creation direction and "
        "lifestyle interests.",
        "Interests usually revolve around concrete lifestyle scenes. Keywords in note titles are often more "
        "informative about the topic than the body text."}},
      {"toutiao",
       {"Toutiao",
        "A news and short-video platform; users mainly browse and produce short videos or picture-text articles.",
        "A tag is a topic label placed in a creator's title, reflecting the user's content-creation niche.",
        "Most content is short video where the title carries the strongest signal. Watch for users who "
        "concentrate on a single niche (food, travel, parenting, ...)."}},
      {"zhihu",
       {"Zhihu",
        "A Q&A and long-form community; users ask questions, write answers and publish articles to share "
        "knowledge.",
        "A tag is the title (or topic) of a question the user browses, answers or posts, reflecting their "
        "knowledge interests and expertise.",
        "Zhihu tags tend to be full question titles (and therefore long). Pay attention to how concentrated the "
        "user's answers are; expert users typically specialise in 2-3 areas."}},
      {"douban",
       {"Douban",
        "A reviews community for films, books and music; users tag works with states such as \"want to watch\" "
        "or \"watched\".",
        "A tag has the form 'action:work-name' (e.g. watched_film:Title, want_to_read_book:Title), reflecting "
        "cultural-consumption preferences.",
        "Interests show through work categories (film/book/music) and genre preferences. Distinguish \"want to "
        "watch\" (intent) from \"watched\" (consumed)."}},
  };
  return table;
}

inline const PlatformContext& platform_context(const std::string& platform_id) {
  auto it = platform_contexts().find(platform_id);
  if (it == platform_contexts().end()) throw InvalidInput("no platform context for " + platform_id);
  return it->second;
}

inline constexpr std::string_view kSystemMessage =
    "You are a user profiling system that maintains evolving user personas from streaming social-media data. "
    "Output valid JSON only.";

namespace detail {

inline std::string post_line(const Post& p) {
  std::string s = p.title.empty() ? p.content : (p.content.empty() ? p.title : p.title + " " + p.content);
  if (!p.action.empty() && !p.item.empty()) s = p.action + " " + p.item + (s.empty() ? "" : " " + s);
  if (!p.quote_content.empty()) s += " // " + p.quote_content;
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

inline std::string render(const PlatformContext& ctx, const UserMeta& user, std::string_view persona,
                          std::size_t step_id, const std::string& activity, const CandidatePool& pool) {
  const auto k = std::to_string(pool.k);
  std::string s;
  s += "# Task: Streaming User-Profile Maintenance and Interest Prediction\n\n";
  s += "You are a user-profiling system that processes streaming social-media data. For every new batch of user "
       "activities you must:\n";
  s += "1. Update the persona. Using the new activities together with the existing persona, maintain a "
       "comprehensive understanding of this user's interests, preferences, and behavioural patterns.\n";
  s += "2. Predict interests. From the candidate pool, select the tags that this user is most likely to engage "
       "with in the next activity cycle.\n\n";
  s += "# Platform Context\n";
  s += "- Platform: " + ctx.name + " - " + ctx.description + "\n";
  s += "- Tag semantics: " + ctx.tag_meaning + "\n";
  s += "- Analysis hint: " + ctx.analysis_hint + "\n\n";
  s += "# User Profile (static)\n";
  s += "- Username: " + user.username + "\n";
  s += "- Bio: " + (user.bio.empty() ? std::string("not provided") : user.bio) + "\n\n";
  s += "# Current Persona (accumulated from prior observations)\n";
  s += std::string(persona) + "\n\n";
  s += "# New Activity Data (batch #" + std::to_string(step_id) + ")\n";
  s += activity + "\n";
  s += "# Candidate Tag Pool (" + std::to_string(pool.tags.size()) + " tags total)\n";
  s += "From the candidate pool below, select exactly " + k +
       " tags that this user is most likely to engage with in the next activity cycle, where k = max(1, "
       "round(0.25 * |C_n|)).\n";
  s += "- You must return exactly " + k + " tags from the pool - no more, no fewer.\n";
  s += "- Your goal is to predict future behaviour, not to summarise the past.\n";
  s += "- Interests evolve over time: some currently hot topics are transient and may not reappear next cycle; "
       "other topics absent from the current batch may surface later because of latent preferences.\n\n";
  s += Json(pool.tag_strings()).dump() + "\n\n";
  s += "# Output Format (Return strict JSON)\n";
  s += "{\n"
       "  \"persona_summary\": \"Updated persona covering the user's core interest areas, behavioural patterns, "
       "and preference traits. (forwarded to the next batch)\",\n"
       "  \"predicted_tags\": [\"tag1\", \"tag2\", ...],\n"
       "  \"reasoning\": \"Briefly state which persona features support your tag selection.\"\n"
       "}\n";
  return s;
}

}  // namespace detail

/// User turn for one streaming step. Pool labels and ground truth are never
/// rendered.
inline std::string render_prompt(const tasks::StepTask& task, const PersonaState& persona, const PlatformContext& ctx) {
  std::string activity;
  for (const auto& p : task.input_batch.posts) activity += detail::post_line(p) + "\n";
  return detail::render(ctx, task.user, persona.text, task.step_index, activity, task.pool);
}

inline std::vector<chat::Message> messages_for(std::string user_turn) {
  return {{"system", std::string(kSystemMessage)}, {"user", std::move(user_turn)}};
}

class ExtractionError : public DataError {
 public:
  using DataError::DataError;
};

/// Strips code fences and reads the three output fields with their defaults.
inline Prediction extract_answer(std::string_view raw) {
  Prediction p;
  p.raw_response = std::string(raw);
  Json j;
  try {
    j = Json::parse(chat::strip_code_fences(raw));
  } catch (const Json::exception& e) {
    throw ExtractionError(std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ExtractionError("response is not a JSON object");
  try {
    if (auto it = j.find("predicted_tags"); it != j.end() && !it->is_null()) {
      p.predicted_tags = it->get<std::vector<std::string>>();
    }
    if (auto it = j.find("persona_summary"); it != j.end() && !it->is_null()) {
      p.persona_summary = it->is_string() ? it->get<std::string>() : it->dump();
    }
    if (auto it = j.find("reasoning"); it != j.end() && !it->is_null()) {
      p.reasoning = it->is_string() ? it->get<std::string>() : it->dump();
    }
  } catch (const Json::exception& e) {
    throw ExtractionError(std::string("predicted_tags is not a list of strings: ") + e.what());
  }
  return p;
}

// Agents ----------------------------------------------------------------------

struct AgentTurn {
  const tasks::StepTask& task;  // oracles read what their kind allows
  const std::vector<chat::Message>& messages;
};

struct AgentReply {
  std::optional<std::string> raw;  // empty: transport failure after retries
  int attempts = 1;
  std::string error;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual AgentReply respond(const AgentTurn& turn) = 0;
  // Called before a user's first step; stateful agents reset per-user memory.
  virtual void begin_user(const std::string& /*user_id*/) {}
  // True when respond() may run for different users concurrently.
  virtual bool concurrent() const { return false; }
};

/// Remote chat model behind the OpenAI-compatible client.
class ChatAgent final : public Agent {
 public:
  ChatAgent(chat::Client& client, chat::ModelClientConfig cfg) : client_(client), cfg_(std::move(cfg)) {}

  std::string name() const override { return cfg_.model.empty() ? "chat" : cfg_.model; }
  bool concurrent() const override { return true; }

  AgentReply respond(const AgentTurn& turn) override {
    auto out = chat::call_model(client_, turn.messages, cfg_);
    return {out.response, out.attempts, out.error};
  }

  const chat::ModelClientConfig& config() const { return cfg_; }

 private:
  chat::Client& client_;
  chat::ModelClientConfig cfg_;
};

// Runs ---------------------------------------------------------------------------

enum class PersonaMode { full, none };
enum class HistoryMode { streaming, long_context };
enum class Granularity { fine, standard, coarse };

NLOHMANN_JSON_SERIALIZE_ENUM(PersonaMode, {{PersonaMode::full, "full"}, {PersonaMode::none, "none"}})
NLOHMANN_JSON_SERIALIZE_ENUM(HistoryMode,
                             {{HistoryMode::streaming, "streaming"}, {HistoryMode::long_context, "long_context"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Granularity, {{Granularity::fine, "fine"},
                                           {Granularity::standard, "default"},
                                           {Granularity::coarse, "coarse"}})

struct RunMode {
  PersonaMode persona = PersonaMode::full;
  HistoryMode history = HistoryMode::streaming;
  Granularity granularity = Granularity::standard;
};

inline void to_json(Json& j, const RunMode& m) {
  j = Json{{"persona", m.persona}, {"history", m.history}, {"granularity", m.granularity}};
}

enum class StepStatus { ok, failed_transport, failed_extraction };

NLOHMANN_JSON_SERIALIZE_ENUM(StepStatus, {{StepStatus::ok, "ok"},
                                          {StepStatus::failed_transport, "failed_transport"},
                                          {StepStatus::failed_extraction, "failed_extraction"}})

struct StepRecord {
  std::string platform_id;
  std::string user_id;
  std::size_t step_index = 0;
  std::string prompt_sha256;
  Prediction prediction;  // raw_response holds the model output verbatim
  StepStatus status = StepStatus::ok;
  int attempts = 0;
  std::string error;
  double latency_ms = 0.0;  // kept out of the transcript so replays are byte-identical

  bool failed() const { return status != StepStatus::ok; }
};

inline void to_json(Json& j, const StepRecord& r) {
  j = Json{{"platform", r.platform_id},
           {"user_id", r.user_id},
           {"step_index", r.step_index},
           {"prompt_sha256", r.prompt_sha256},
           {"prediction", r.prediction},
           {"status", r.status},
           {"attempts", r.attempts}};
  if (!r.error.empty()) j["error"] = r.error;
}

inline void from_json(const Json& j, StepRecord& r) {
  r.platform_id = j.at("platform").get<std::string>();
  r.user_id = j.at("user_id").get<std::string>();
  r.step_index = j.at("step_index").get<std::size_t>();
  r.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
  r.prediction = j.at("prediction").get<Prediction>();
  r.status = j.at("status").get<StepStatus>();
  r.attempts = j.at("attempts").get<int>();
  streamprofile::detail::get_opt(j, "error", r.error);
}

inline Json timing_json(const StepRecord& r) {
  return Json{{"user_id", r.user_id}, {"step_index", r.step_index}, {"latency_ms", r.latency_ms}};
}

namespace detail {

inline StepRecord run_turn(Agent& agent, const tasks::StepTask& task, const std::string& prompt) {
  StepRecord rec;
  rec.platform_id = task.platform_id;
  rec.user_id = task.user.user_id;
  rec.step_index = task.step_index;
  rec.prompt_sha256 = io::sha256_hex(prompt);
  auto messages = messages_for(prompt);
  auto start = std::chrono::steady_clock::now();
  auto reply = agent.respond({task, messages});
  rec.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  rec.attempts = reply.attempts;
  if (!reply.raw) {
    rec.status = StepStatus::failed_transport;
    rec.error = reply.error;
    return rec;
  }
  try {
    rec.prediction = extract_answer(*reply.raw);
  } catch (const ExtractionError& e) {
    rec.status = StepStatus::failed_extraction;
    rec.error = e.what();
    rec.prediction = Prediction{};
    rec.prediction.raw_response = *reply.raw;
  }
  return rec;
}

}  // namespace detail

/// Read-update-write loop over one user's tasks in step order. With full
/// persona passing the summary is carried forward, falling back to the
/// previous persona when a step returns none or fails.
inline std::vector<StepRecord> run_stream(const std::vector<tasks::StepTask>& user_tasks, Agent& agent,
                                          const RunMode& mode) {
  std::vector<StepRecord> out;
  if (user_tasks.empty()) return out;
  agent.begin_user(user_tasks.front().user.user_id);
  PersonaState persona;
  for (const auto& task : user_tasks) {
    const auto& ctx = platform_context(task.platform_id);
    PersonaState shown = mode.persona == PersonaMode::full ? persona : PersonaState{};
    auto rec = detail::run_turn(agent, task, render_prompt(task, shown, ctx));
    if (mode.persona == PersonaMode::full && !rec.failed() && !rec.prediction.persona_summary.empty()) {
      persona = PersonaState{rec.prediction.persona_summary, task.step_index};
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline constexpr std::size_t kLongContextMinSteps = 4;

/// All posts of batches 1..N under one "--- <date> ---" header per calendar date.
inline std::string long_context_activity(const std::vector<tasks::StepTask>& user_tasks) {
  std::string s;
  std::string current;
  for (const auto& t : user_tasks) {
    for (const auto& p : t.input_batch.posts) {
      auto date = text::format_date(p.timestamp);
      if (date != current) {
        s += "--- " + date + " ---\n";
        current = date;
      }
      s += detail::post_line(p) + "\n";
    }
  }
  return s;
}

inline std::string render_long_context_prompt(const std::vector<tasks::StepTask>& user_tasks) {
  const auto& last = user_tasks.back();
  return detail::render(platform_context(last.platform_id), last.user, kColdStartPersona, last.step_index,
                        long_context_activity(user_tasks), last.pool);
}

/// Single prediction over the concatenated history, scored on the final
/// streaming task's pool. Users with fewer than four steps are skipped.
inline std::optional<StepRecord> run_long_context(const std::vector<tasks::StepTask>& user_tasks, Agent& agent) {
  if (user_tasks.size() < kLongContextMinSteps) return std::nullopt;
  agent.begin_user(user_tasks.front().user.user_id);
  return detail::run_turn(agent, user_tasks.back(), render_long_context_prompt(user_tasks));
}

/// (high-frequency, low-frequency) buffer triggers per granularity group.
inline std::size_t granularity_trigger(Granularity g, const PlatformProfile& profile) {
  switch (g) {
    case Granularity::fine: return profile.high_frequency ? 3 : 1;
    case Granularity::standard: return profile.high_frequency ? 5 : 3;
    case Granularity::coarse: return profile.high_frequency ? 8 : 5;
  }
  return profile.buffer_trigger;
}

inline std::vector<StreamBatch> rebatch_granularity(const UserStream& user, Granularity g,
                                                    const PlatformProfile& profile,
                                                    const buffer::ReauditConfig& reaudit = {}) {
  auto p = profile.with_trigger(granularity_trigger(g, profile));
  return buffer::run_user(user, p, reaudit).batches;
}

/// Runs every user, concurrently when the agent allows it, and returns the
/// records ordered by (platform, user, step).
inline std::vector<StepRecord> run_all(const std::vector<std::vector<tasks::StepTask>>& users, Agent& agent,
                                       const RunMode& mode, std::size_t max_in_flight = 1) {
  std::vector<std::vector<StepRecord>> per_user(users.size());
  auto run_one = [&](std::size_t i) {
    if (mode.history == HistoryMode::long_context) {
      if (auto r = run_long_context(users[i], agent)) per_user[i].push_back(std::move(*r));
    } else {
      per_user[i] = run_stream(users[i], agent, mode);
    }
  };
  std::size_t workers = agent.concurrent() ? std::max<std::size_t>(1, max_in_flight) : 1;
  if (workers == 1) {
    for (std::size_t i = 0; i < users.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (auto i = next++; i < users.size(); i = next++) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            next = users.size();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }
  std::vector<StepRecord> out;
  for (auto& v : per_user) {
    for (auto& r : v) out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const StepRecord& a, const StepRecord& b) {
    return std::tie(a.platform_id, a.user_id, a.step_index) < std::tie(b.platform_id, b.user_id, b.step_index);
  });
  return out;
}

}  // namespace streamprofile::harness
