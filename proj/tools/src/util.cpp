#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "fulllik/errors.hpp"
#include "internal.hpp"

namespace fulllik::cli {

std::filesystem::path RunContext::artifact(const std::string& name) {
  artifacts.push_back(name);
  return out / name;
}

void RunContext::write_text(const std::string& name, const std::string& text) {
  const auto path = artifact(name);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

void RunContext::write_json(const std::string& name, const json& doc) { write_text(name, dump(doc)); }

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  // Rethrow the lowest-index failure so the reported error is deterministic.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::size_t TextTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return c;
  throw InvalidArgument("no column named '" + name + "'");
}

std::string TextTable::to_csv() const {
  std::string s;
  for (std::size_t c = 0; c < header.size(); ++c) s += (c ? "," : "") + header[c];
  s += '\n';
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) s += (c ? "," : "") + r[c];
    s += '\n';
  }
  return s;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

TextTable read_text_table(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open '" + path.string() + "'");
  TextTable t;
  std::string line;
  std::size_t row = 0;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    ++row;
    if (cells.size() != t.header.size())
      throw ParseError("expected " + std::to_string(t.header.size()) + " cells", row, cells.size());
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError("missing header", 0, 0);
  return t;
}

DataSource load_data(const std::string& spec, std::uint64_t seed, const std::string& target,
                     const std::string& target_kind) {
  DataSource src;
  if (spec.rfind("gen:", 0) == 0) {
    const auto q = spec.find('?');
    src.generator = spec.substr(4, q == std::string::npos ? std::string::npos : q - 4);
    std::map<std::string, std::string> params;
    if (q != std::string::npos) {
      std::istringstream in(spec.substr(q + 1));
      std::string kv;
      while (std::getline(in, kv, '&')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidArgument("malformed generator parameter '" + kv + "'");
        params[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
    }
    auto g = generate(src.generator, params, seed);
    src.data = std::move(g.data);
    src.true_weights = std::move(g.true_weights);
    src.generated = true;
    return src;
  }
  TargetKind kind = TargetKind::none;
  if (!target.empty()) {
    if (target_kind == "real") kind = TargetKind::real;
    else if (target_kind == "classes") kind = TargetKind::classes;
    else throw InvalidArgument("target kind must be 'real' or 'classes'");
  }
  src.data = load_csv(spec, target.empty() ? std::nullopt : std::optional<std::string>(target), kind);
  return src;
}

json fit_report_json(const FitReport& r) {
  json j;
  j["seed"] = r.seed;
  j["steps"] = r.steps;
  j["task"] = to_string(r.task);
  j["family"] = to_string(r.family);
  j["final_loss"] = number(r.final_loss);
  j["train_nll"] = number(r.train_nll);
  auto opt = [&](const char* key, const std::optional<double>& v) { j[key] = v ? number(*v) : json(nullptr); };
  opt("test_nll", r.test_nll);
  opt("train_mse", r.train_mse);
  opt("test_mse", r.test_mse);
  opt("train_accuracy", r.train_accuracy);
  opt("test_accuracy", r.test_accuracy);
  opt("prior_nll", r.prior_nll);
  opt("prior_raw_nll", r.prior_raw_nll);
  j["parameters"] = {{"model", r.model_parameters},
                     {"likelihood", r.likelihood_parameters},
                     {"prior", r.prior_parameters}};
  json slots = json::array();
  for (const auto& s : r.slots)
    slots.push_back({{"name", s.name},
                     {"conditioning", s.conditioning},
                     {"parameters", s.parameters},
                     {"space", s.space},
                     {"time", s.time},
                     {"mean", number(s.mean)},
                     {"min", number(s.min)},
                     {"max", number(s.max)}});
  j["slots"] = slots;
  if (!r.effective_lambda.empty()) {
    double lo = r.effective_lambda.front(), hi = lo, sum = 0.0;
    for (double v : r.effective_lambda) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    j["effective_lambda"] = {{"count", r.effective_lambda.size()},
                             {"mean", number(sum / static_cast<double>(r.effective_lambda.size()))},
                             {"min", number(lo)},
                             {"max", number(hi)}};
  } else {
    j["effective_lambda"] = nullptr;
  }
  return j;
}

}  // namespace fulllik::cli
