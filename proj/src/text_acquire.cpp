#include "guardian/text_acquire.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <set>

namespace guardian {

RawDocument make_document(const std::filesystem::path& path) {
  RawDocument doc;
  doc.path = path;
  doc.document_id = path.stem().string();
  doc.declared_kind = to_lower(path.extension().string()) == ".pdf" ? RawDocument::Kind::pdf
                                                                     : RawDocument::Kind::plaintext;
  if (doc.document_id.empty()) throw ConfigError("document without a file stem: " + path.string());
  return doc;
}

std::vector<EngineSpec> load_engine_chain(const std::string& path) {
  std::vector<EngineSpec> chain;
  for (const auto& j : read_jsonl(path)) {
    EngineSpec spec;
    auto e = parse_engine(j.value("engine", ""));
    if (!e) throw ConfigError(path + ": unknown engine " + j.value("engine", ""));
    spec.engine = *e;
    spec.command_template = j.value("command", "");
    spec.timeout_s = j.value("timeout_s", 60.0);
    if (spec.engine != Engine::plaintext && spec.command_template.empty()) {
      throw ConfigError(path + ": engine " + std::string(to_string(*e)) + " needs a command");
    }
    if (spec.timeout_s <= 0) throw ConfigError(path + ": timeout_s must be positive");
    chain.push_back(std::move(spec));
  }
  return chain;
}

std::string_view to_string(EngineAttempt::Outcome o) {
  switch (o) {
    case EngineAttempt::Outcome::accepted: return "accepted";
    case EngineAttempt::Outcome::low_quality: return "low_quality";
    case EngineAttempt::Outcome::failed: return "failed";
    case EngineAttempt::Outcome::timeout: return "timeout";
  }
  return "failed";
}

std::pair<size_t, double> text_quality(std::string_view text) {
  size_t alnum = 0;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) ++alnum;
  }
  return {text.size(), static_cast<double>(alnum) / static_cast<double>(std::max<size_t>(1, text.size()))};
}

ExtractionError::ExtractionError(std::string document_id, std::vector<EngineAttempt> causes)
    : Error([&] {
        std::string msg = "text extraction failed for " + document_id + ":";
        for (const auto& c : causes) {
          msg += " [" + std::string(to_string(c.engine)) + ": " + c.detail + "]";
        }
        return msg;
      }()),
      causes_(std::move(causes)) {}

// --- subprocess --------------------------------------------------------------

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

std::string run_command(const std::string& command, double timeout_s) {
  int fds[2];
  if (pipe(fds) != 0) throw EngineFailure("pipe() failed");
  pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw EngineFailure("fork() failed");
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(fds[1], STDOUT_FILENO);
    int devnull = open("/dev/null", O_WRONLY);
    if (devnull >= 0) dup2(devnull, STDERR_FILENO);
    close(fds[0]);
    close(fds[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(fds[1]);

  using clock = std::chrono::steady_clock;
  auto deadline = clock::now() + std::chrono::duration_cast<clock::duration>(
                                     std::chrono::duration<double>(timeout_s));
  std::string out;
  bool timed_out = false;
  char buf[8192];
  while (true) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
    if (left <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{fds[0], POLLIN, 0};
    int rc = poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1000)));
    if (rc < 0 && errno == EINTR) continue;
    if (rc < 0) break;
    if (rc == 0) continue;
    ssize_t n = read(fds[0], buf, sizeof buf);
    if (n <= 0) break;
    out.append(buf, static_cast<size_t>(n));
  }
  close(fds[0]);

  int status = 0;
  if (!timed_out) {
    while (true) {
      pid_t r = waitpid(pid, &status, WNOHANG);
      if (r == pid) break;
      if (clock::now() >= deadline) {
        timed_out = true;
        break;
      }
      usleep(2000);
    }
  }
  if (timed_out) {
    kill(-pid, SIGKILL);
    kill(pid, SIGKILL);
    waitpid(pid, &status, 0);
    throw EngineTimeout("timed out after " + format_decimal(timeout_s) + " s");
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw EngineFailure("command exited with status " +
                        std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }
  return out;
}

std::string SubprocessRunner::run(const EngineSpec& spec, const RawDocument& doc) {
  if (spec.engine == Engine::plaintext) {
    try {
      return read_file(doc.path.string());
    } catch (const IoError& e) {
      throw EngineFailure(e.what());
    }
  }
  std::string cmd = spec.command_template;
  replace_all(cmd, "{input}", shell_quote(doc.path.string()));
  bool to_file = cmd.find("{output}") != std::string::npos;
  std::filesystem::path out_path;
  if (to_file) {
    std::string tmpl = (std::filesystem::temp_directory_path() / "guardian-XXXXXX").string();
    int fd = mkstemp(tmpl.data());
    if (fd < 0) throw EngineFailure("cannot create temporary output file");
    close(fd);
    out_path = tmpl;
    replace_all(cmd, "{output}", shell_quote(out_path.string()));
  }
  struct Cleanup {
    std::filesystem::path p;
    ~Cleanup() {
      std::error_code ec;
      if (!p.empty()) std::filesystem::remove(p, ec);
    }
  } cleanup{out_path};
  std::string stdout_text = run_command(cmd, spec.timeout_s);
  if (!to_file) return stdout_text;
  try {
    return read_file(out_path.string());
  } catch (const IoError& e) {
    throw EngineFailure(e.what());
  }
}

// --- call log ----------------------------------------------------------------

void CallLog::append(const CallLogEntry& e) {
  std::lock_guard lock(mu_);
  entries_.push_back(e);
  if (sink_) {
    Json j = Json::object();
    j["document_id"] = e.document_id;
    j["engine"] = to_string(e.engine);
    j["outcome"] = to_string(e.outcome);
    j["millis"] = e.millis;
    *sink_ << j.dump() << '\n';
  }
}

std::vector<CallLogEntry> CallLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

// --- cascade -----------------------------------------------------------------

ExtractedText extract_text(const RawDocument& doc, std::span<const EngineSpec> chain,
                           const QualityThresholds& quality, EngineRunner& runner, CallLog* log) {
  if (chain.empty()) throw ConfigError("empty engine chain");
  for (size_t i = 0; i + 1 < chain.size(); ++i) {
    if (chain[i].engine == Engine::ocr) throw ConfigError("the OCR engine must be last in the chain");
  }

  std::vector<EngineAttempt> attempts;
  std::optional<ExtractedText> best;
  size_t best_score = 0;

  for (const auto& spec : chain) {
    EngineAttempt attempt;
    attempt.engine = spec.engine;
    auto started = std::chrono::steady_clock::now();
    std::optional<std::string> text;
    try {
      text = prenormalize(runner.run(spec, doc));
    } catch (const EngineTimeout& e) {
      attempt.outcome = EngineAttempt::Outcome::timeout;
      attempt.detail = e.what();
    } catch (const EngineFailure& e) {
      attempt.outcome = EngineAttempt::Outcome::failed;
      attempt.detail = e.what();
    }
    attempt.millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();

    bool accepted = false;
    if (text) {
      auto [chars, ratio] = text_quality(*text);
      accepted = chars >= quality.min_chars && ratio >= quality.min_alnum;
      attempt.outcome = accepted ? EngineAttempt::Outcome::accepted : EngineAttempt::Outcome::low_quality;
      attempt.detail = std::to_string(chars) + " chars, alnum ratio " + format_decimal(ratio);
      size_t score = static_cast<size_t>(std::llround(ratio * static_cast<double>(chars)));
      if (!best || score > best_score) {
        best = ExtractedText{*text, spec.engine, chars, ratio, !accepted, {}};
        best_score = score;
      }
      if (accepted) {
        best = ExtractedText{std::move(*text), spec.engine, chars, ratio, false, {}};
      }
    }
    attempts.push_back(attempt);
    if (log) log->append({doc.document_id, spec.engine, attempt.outcome, attempt.millis});
    if (accepted) break;
  }

  if (!best) throw ExtractionError(doc.document_id, std::move(attempts));
  best->attempts = std::move(attempts);
  return std::move(*best);
}

// --- normalization -----------------------------------------------------------

std::string prenormalize(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\r') {
      cleaned.push_back('\n');
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else if (c == '\t' || c == '\v' || c == '\f') {
      cleaned.push_back(' ');
    } else if ((static_cast<unsigned char>(c) < 0x20 && c != '\n') || c == 0x7f) {
      continue;
    } else {
      cleaned.push_back(c);
    }
  }

  std::vector<std::string> lines;
  for (auto& line : split(cleaned, '\n')) {
    std::string collapsed;
    collapsed.reserve(line.size());
    for (char c : line) {
      if (c == ' ' && (collapsed.empty() || collapsed.back() == ' ')) continue;
      collapsed.push_back(c);
    }
    if (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
    lines.push_back(std::move(collapsed));
  }

  std::string out;
  out.reserve(cleaned.size());
  size_t i = 0;
  bool first = true;
  auto emit = [&](const std::string& l) {
    if (!first) out.push_back('\n');
    out += l;
    first = false;
  };
  while (i < lines.size()) {
    if (!lines[i].empty()) {
      emit(lines[i++]);
      continue;
    }
    size_t run = 0;
    while (i < lines.size() && lines[i].empty()) {
      ++run;
      ++i;
    }
    size_t keep = run >= 3 ? 1 : run;
    for (size_t k = 0; k < keep; ++k) emit("");
  }
  return out;
}

// --- case splitting ----------------------------------------------------------

std::vector<CaseSegment> split_cases(std::string_view text, std::span<const Pattern> headers) {
  std::set<size_t> starts;
  for (const auto& p : headers) {
    for (const auto& m : p.find_all(text)) starts.insert(m.whole.begin);
  }
  // The first header absorbs any preamble, so drop a boundary at offset 0 and
  // keep only boundaries after the first match.
  std::vector<size_t> cuts;
  bool first = true;
  for (size_t s : starts) {
    if (first) {
      first = false;
      continue;
    }
    cuts.push_back(s);
  }
  std::vector<CaseSegment> out;
  size_t begin = 0;
  int index = 0;
  for (size_t cut : cuts) {
    out.push_back({index++, std::string(text.substr(begin, cut - begin)), begin, cut});
    begin = cut;
  }
  out.push_back({index, std::string(text.substr(begin)), begin, text.size()});
  return out;
}

std::vector<CaseSegment> split_cases(std::string_view text,
                                     const std::vector<std::string>& header_patterns) {
  std::vector<Pattern> compiled;
  compiled.reserve(header_patterns.size());
  for (const auto& src : header_patterns) compiled.emplace_back(src);
  return split_cases(text, compiled);
}

}  // namespace guardian
