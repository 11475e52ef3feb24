#include "biasforge/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "biasforge/error.hpp"
#include "biasforge/json_io.hpp"

namespace biasforge {
namespace {

const std::vector<std::string> kFixedCovariates = {"first_app_month", "housing", "education",
                                                   "income", "dpi"};

[[noreturn]] void data_error(const CsvTable& t, std::size_t row, const std::string& msg) {
  const std::size_t line = row < t.lines.size() ? t.lines[row] : 0;
  throw Error(ErrorKind::Data, t.source + ":" + std::to_string(line) + ": " + msg);
}

int parse_int(std::string_view text, const CsvTable& t, std::size_t row) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    data_error(t, row, "expected an integer, got '" + std::string(text) + "'");
  return v;
}

using Key = std::pair<std::string, int>;

struct KeyHash {
  std::size_t operator()(const Key& k) const noexcept {
    return std::hash<std::string>{}(k.first) * 31u + static_cast<std::size_t>(k.second);
  }
};

std::string join_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) line += ',';
    line += csv_escape(fields[k]);
  }
  line += '\n';
  return line;
}

std::vector<ApplicantProfile> read_applicants(const std::filesystem::path& dir) {
  const CsvTable t = read_csv(dir / "applicants.csv");
  const std::size_t id_col = t.column("id");
  const std::size_t gender_col = t.column("gender");
  for (const auto& name : kFixedCovariates) t.column(name);
  std::vector<ApplicantProfile> out;
  out.reserve(t.rows.size());
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ApplicantProfile p;
    p.id = t.rows[r][id_col];
    if (!seen.insert(p.id).second) data_error(t, r, "duplicate applicant id " + p.id);
    try {
      p.gender = parse_gender(t.rows[r][gender_col]);
    } catch (const Error& e) {
      data_error(t, r, e.what());
    }
    p.covariates["constant"] = 1.0;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (c == id_col || c == gender_col) continue;
      p.covariates[t.header[c]] = parse_number(t.rows[r][c], t, r);
    }
    out.push_back(std::move(p));
  }
  return out;
}

// Loans grouped per applicant in t order, validating contiguity from t = 1.
std::vector<std::vector<LoanTerms>> read_loans(const std::filesystem::path& dir,
                                               const std::vector<ApplicantProfile>& profiles) {
  const CsvTable t = read_csv(dir / "loans.csv");
  const std::size_t id_c = t.column("applicant_id"), t_c = t.column("t"),
                    amount_c = t.column("amount"), term_c = t.column("term_months"),
                    rate_c = t.column("annual_rate"), a_c = t.column("a"), b_c = t.column("b");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < profiles.size(); ++i) index[profiles[i].id] = i;
  std::vector<std::map<int, std::pair<LoanTerms, std::size_t>>> grouped(profiles.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto it = index.find(row[id_c]);
    if (it == index.end()) data_error(t, r, "unknown applicant id " + row[id_c]);
    LoanTerms terms;
    terms.amount = parse_number(row[amount_c], t, r);
    terms.term_months = parse_int(row[term_c], t, r);
    terms.annual_rate = parse_number(row[rate_c], t, r);
    terms.gain_if_repaid = parse_number(row[a_c], t, r);
    terms.loss_if_default = parse_number(row[b_c], t, r);
    try {
      terms.validate();
    } catch (const Error& e) {
      data_error(t, r, e.what());
    }
    const int ti = parse_int(row[t_c], t, r);
    if (!grouped[it->second].emplace(ti, std::make_pair(terms, r)).second)
      data_error(t, r, "duplicate application " + row[id_c] + " t=" + row[t_c]);
  }
  std::vector<std::vector<LoanTerms>> out(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    int expected = 1;
    for (const auto& [ti, entry] : grouped[i]) {
      if (ti != expected)
        data_error(t, entry.second,
                   "application index gap for applicant " + profiles[i].id + ": expected t=" +
                       std::to_string(expected) + ", found t=" + std::to_string(ti));
      out[i].push_back(entry.first);
      ++expected;
    }
    if (out[i].empty())
      throw Error(ErrorKind::Data, "applicant " + profiles[i].id + " has no loans");
  }
  return out;
}

std::unordered_map<Key, RepaymentSignals, KeyHash> read_signals(const std::filesystem::path& dir) {
  const CsvTable t = read_csv(dir / "signals.csv");
  const std::size_t id_c = t.column("applicant_id"), t_c = t.column("t"),
                    d_c = t.column("overdue_days"), m_c = t.column("overdue_frac"),
                    a_c = t.column("attitude_frac"), h_c = t.column("help_frac");
  std::unordered_map<Key, RepaymentSignals, KeyHash> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    RepaymentSignals s;
    s.overdue_days = parse_number(row[d_c], t, r);
    s.overdue_frac = parse_number(row[m_c], t, r);
    s.attitude_frac = parse_number(row[a_c], t, r);
    s.help_frac = parse_number(row[h_c], t, r);
    try {
      s.validate();
    } catch (const Error& e) {
      data_error(t, r, e.what());
    }
    if (!out.emplace(Key{row[id_c], parse_int(row[t_c], t, r)}, s).second)
      data_error(t, r, "duplicate signals row");
  }
  return out;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return c;
  throw Error(ErrorKind::Data, source + ": missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text, std::string source) {
  CsvTable table;
  table.source = std::move(source);
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t row_line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    const bool blank = row.size() == 1 && row[0].empty();
    if (!blank) {
      if (table.header.empty()) {
        table.header = std::move(row);
      } else {
        if (row.size() != table.header.size())
          throw Error(ErrorKind::Data, table.source + ":" + std::to_string(row_line) +
                                           ": expected " + std::to_string(table.header.size()) +
                                           " fields, found " + std::to_string(row.size()));
        table.rows.push_back(std::move(row));
        table.lines.push_back(row_line);
      }
    }
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started)
          throw Error(ErrorKind::Data,
                      table.source + ":" + std::to_string(line) + ": stray quote in field");
        in_quotes = true;
        field_started = true;
        break;
      case ',': end_field(); break;
      case '\r': break;
      case '\n':
        end_row();
        ++line;
        row_line = line;
        break;
      default:
        field += ch;
        field_started = true;
    }
  }
  if (in_quotes)
    throw Error(ErrorKind::Data, table.source + ": unterminated quoted field");
  if (!field.empty() || !row.empty()) end_row();
  if (table.header.empty()) throw Error(ErrorKind::Data, table.source + ": missing header");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_text_file(path), path.filename().string());
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error(ErrorKind::Numerical, "cannot format number");
  return std::string(buf, ptr);
}

double parse_number(std::string_view text, const CsvTable& table, std::size_t row) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    data_error(table, row, "expected a finite number, got '" + std::string(text) + "'");
  return v;
}

void write_full_sample(const std::filesystem::path& dir, const FullSampleDataset& dataset) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + dir.string());

  std::set<std::string> extras;
  for (const auto& p : dataset.profiles)
    for (const auto& [name, v] : p.covariates)
      if (name != "constant" &&
          std::find(kFixedCovariates.begin(), kFixedCovariates.end(), name) ==
              kFixedCovariates.end())
        extras.insert(name);

  std::vector<std::string> header = {"id", "gender"};
  header.insert(header.end(), kFixedCovariates.begin(), kFixedCovariates.end());
  header.insert(header.end(), extras.begin(), extras.end());

  std::string applicants = join_row(header);
  std::string loans = join_row({"applicant_id", "t", "amount", "term_months", "annual_rate", "a", "b"});
  std::string signals =
      join_row({"applicant_id", "t", "overdue_days", "overdue_frac", "attitude_frac", "help_frac"});
  std::string outcomes = join_row({"applicant_id", "t", "outcome", "realized_profit"});

  for (std::size_t i = 0; i < dataset.applicant_count(); ++i) {
    const auto& p = dataset.profiles[i];
    std::vector<std::string> row = {p.id, std::string(to_string(p.gender))};
    for (std::size_t c = 2; c < header.size(); ++c) {
      const auto it = p.covariates.find(header[c]);
      if (it == p.covariates.end())
        throw Error(ErrorKind::Data, "applicant " + p.id + " lacks covariate " + header[c]);
      row.push_back(format_number(it->second));
    }
    applicants += join_row(row);
    for (std::size_t k = 0; k < dataset.histories[i].size(); ++k) {
      const Application& app = dataset.histories[i][k];
      const std::string t = std::to_string(k + 1);
      loans += join_row({p.id, t, format_number(app.terms.amount),
                         std::to_string(app.terms.term_months),
                         format_number(app.terms.annual_rate),
                         format_number(app.terms.gain_if_repaid),
                         format_number(app.terms.loss_if_default)});
      signals += join_row({p.id, t, format_number(app.signals.overdue_days),
                           format_number(app.signals.overdue_frac),
                           format_number(app.signals.attitude_frac),
                           format_number(app.signals.help_frac)});
      outcomes += join_row({p.id, t, std::string(to_string(app.outcome)),
                            format_number(app.realized_profit)});
    }
  }
  write_text_file(dir / "applicants.csv", applicants);
  write_text_file(dir / "loans.csv", loans);
  write_text_file(dir / "signals.csv", signals);
  write_text_file(dir / "outcomes.csv", outcomes);
}

FullSampleDataset read_full_sample(const std::filesystem::path& dir) {
  FullSampleDataset ds;
  ds.profiles = read_applicants(dir);
  const auto loans = read_loans(dir, ds.profiles);
  const auto signals = read_signals(dir);

  const CsvTable t = read_csv(dir / "outcomes.csv");
  const std::size_t id_c = t.column("applicant_id"), t_c = t.column("t"),
                    o_c = t.column("outcome"), p_c = t.column("realized_profit");
  std::unordered_map<Key, std::pair<Outcome, double>, KeyHash> outcomes;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Outcome o{};
    try {
      o = parse_outcome(t.rows[r][o_c]);
    } catch (const Error& e) {
      data_error(t, r, e.what());
    }
    outcomes[{t.rows[r][id_c], parse_int(t.rows[r][t_c], t, r)}] = {
        o, parse_number(t.rows[r][p_c], t, r)};
  }

  ds.histories.resize(ds.profiles.size());
  for (std::size_t i = 0; i < ds.profiles.size(); ++i) {
    for (std::size_t k = 0; k < loans[i].size(); ++k) {
      const Key key{ds.profiles[i].id, static_cast<int>(k + 1)};
      const auto s = signals.find(key);
      const auto o = outcomes.find(key);
      if (s == signals.end() || o == outcomes.end())
        throw Error(ErrorKind::Data, "applicant " + key.first + " t=" + std::to_string(key.second) +
                                         ": full sample needs signals and an outcome");
      Application app;
      app.terms = loans[i][k];
      app.signals = s->second;
      app.outcome = o->second.first;
      app.realized_profit = o->second.second;
      ds.histories[i].push_back(app);
    }
  }
  ds.validate();
  return ds;
}

void write_decisions(const std::filesystem::path& path, const FullSampleDataset& dataset,
                     const std::vector<DecisionRecord>& records) {
  std::string out = join_row({"applicant_id", "t", "approved"});
  for (const DecisionRecord& r : records) {
    if (!r.approved) throw Error(ErrorKind::Data, "decisions.csv needs sampled decisions");
    out += join_row({dataset.profiles.at(r.applicant).id, std::to_string(r.t),
                     *r.approved ? "1" : "0"});
  }
  write_text_file(path, out);
}

DecisionLog read_decision_log(const std::filesystem::path& dir) {
  DecisionLog log;
  log.profiles = read_applicants(dir);
  const auto loans = read_loans(dir, log.profiles);
  const auto signals = read_signals(dir);

  const CsvTable t = read_csv(dir / "decisions.csv");
  const std::size_t id_c = t.column("applicant_id"), t_c = t.column("t"),
                    a_c = t.column("approved");
  std::unordered_map<Key, bool, KeyHash> decisions;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& v = t.rows[r][a_c];
    if (v != "0" && v != "1") data_error(t, r, "approved must be 0 or 1");
    if (!decisions.emplace(Key{t.rows[r][id_c], parse_int(t.rows[r][t_c], t, r)}, v == "1").second)
      data_error(t, r, "duplicate decision row");
  }
  if (decisions.empty()) throw Error(ErrorKind::Data, "decision log is empty");

  log.histories.resize(log.profiles.size());
  for (std::size_t i = 0; i < log.profiles.size(); ++i) {
    for (std::size_t k = 0; k < loans[i].size(); ++k) {
      const Key key{log.profiles[i].id, static_cast<int>(k + 1)};
      const auto d = decisions.find(key);
      if (d == decisions.end())
        throw Error(ErrorKind::Data, "no decision for applicant " + key.first + " t=" +
                                         std::to_string(key.second));
      LoggedApplication la;
      la.terms = loans[i][k];
      la.approved = d->second;
      if (la.approved) {
        const auto s = signals.find(key);
        if (s != signals.end()) la.signals = s->second;
        else if (k + 1 < loans[i].size())
          throw Error(ErrorKind::Data, "approved application " + key.first + " t=" +
                                           std::to_string(key.second) + " has no signals");
      }
      log.histories[i].push_back(la);
    }
  }
  return log;
}

}  // namespace biasforge
