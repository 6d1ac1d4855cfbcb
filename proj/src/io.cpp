#include "sdegp/io.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "sdegp/errors.hpp"

namespace sdegp {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

double parse_number(const std::string& s, const std::string& context) {
  if (s.empty()) throw IngestionError("missing value " + context);
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size())
    throw IngestionError("malformed number '" + s + "' " + context);
  return v;
}

std::vector<std::string> read_lines(const std::string& path,
                                    const char* what) {
  std::ifstream in(path);
  if (!in) throw IngestionError(std::string("cannot open ") + what + ": " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex(const std::string& s, const std::string& field) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (s.empty() || end != begin + s.size())
    throw ParseError("model file: malformed numeric field '" + field + "'");
  return v;
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(fmt_hex(v[i]));
  return a;
}

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(fmt_hex(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

const ordered_json& get_field(const ordered_json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end())
    throw ParseError(std::string("model file: missing field '") + key + "'");
  return *it;
}

double json_to_double(const ordered_json& j, const char* field) {
  if (!j.is_string())
    throw ParseError(std::string("model file: field '") + field +
                     "' must be a hex-float string");
  return parse_hex(j.get<std::string>(), field);
}

Eigen::VectorXd json_to_vector(const ordered_json& j, const char* field) {
  if (!j.is_array())
    throw ParseError(std::string("model file: field '") + field +
                     "' must be an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = json_to_double(j[i], field);
  return v;
}

Eigen::MatrixXd json_to_matrix(const ordered_json& j, const char* field,
                               Eigen::Index dim) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dim)
    throw ParseError(std::string("model file: field '") + field +
                     "' must be a " + std::to_string(dim) + "-row array");
  Eigen::MatrixXd m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const ordered_json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim)
      throw ParseError(std::string("model file: field '") + field +
                       "' has a malformed row");
    for (Eigen::Index k = 0; k < dim; ++k)
      m(i, k) = json_to_double(row[static_cast<std::size_t>(k)], field);
  }
  return m;
}

ordered_json kernel_to_json(const KernelSpec& spec) {
  ordered_json j;
  j["family"] = family_name(spec.family);
  j["theta"] = vector_to_json(spec.theta);
  j["amplitude"] = fmt_hex(spec.amplitude);
  j["jitter"] = fmt_hex(spec.jitter);
  return j;
}

KernelSpec kernel_from_json(const ordered_json& j, const char* which) {
  if (!j.is_object())
    throw ParseError(std::string("model file: kernel '") + which +
                     "' must be an object");
  const std::string name = get_field(j, "family").get<std::string>();
  KernelFamily family;
  try {
    family = family_from_name(name);
  } catch (const UsageError& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  return make_kernel(family, json_to_vector(get_field(j, "theta"), "theta"),
                     json_to_double(get_field(j, "amplitude"), "amplitude"),
                     json_to_double(get_field(j, "jitter"), "jitter"));
}

}  // namespace

Dataset load_series(const std::string& path, std::optional<double> dt_override) {
  const std::vector<std::string> lines = read_lines(path, "series file");

  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size())
    throw IngestionError("series file is empty: " + path);

  std::vector<std::string> header = split_fields(lower(lines[first]));
  bool has_time = false;
  if (header.size() == 2 && header[0] == "t" && header[1] == "x")
    has_time = true;
  else if (!(header.size() == 1 && header[0] == "x"))
    throw IngestionError("series file needs a 't,x' or 'x' header, got '" +
                         trim(lines[first]) + "'");

  std::vector<double> ts, xs;
  Eigen::Index row = 0;
  for (std::size_t k = first + 1; k < lines.size(); ++k) {
    if (trim(lines[k]).empty()) continue;
    const std::vector<std::string> fields = split_fields(lines[k]);
    if (fields.size() != header.size())
      throw IngestionError("wrong field count at index " + std::to_string(row));
    const std::string at = "at index " + std::to_string(row);
    if (has_time) {
      ts.push_back(parse_number(fields[0], at));
      xs.push_back(parse_number(fields[1], at));
    } else {
      xs.push_back(parse_number(fields[0], at));
    }
    ++row;
  }
  if (xs.size() < 3)
    throw IngestionError("series needs at least 3 samples, got " +
                         std::to_string(xs.size()));

  double dt = 0.0;
  if (has_time) {
    if (dt_override)
      throw UsageError("dt override conflicts with an explicit time column");
    dt = ts[1] - ts[0];
    if (!(dt > 0.0))
      throw IngestionError("non-increasing time at index 1");
    for (std::size_t i = 1; i < ts.size(); ++i) {
      const double step = ts[i] - ts[i - 1];
      if (std::abs(step - dt) > 1e-6 * std::abs(dt))
        throw IngestionError("non-uniform sampling at index " + std::to_string(i));
    }
  } else {
    if (!dt_override)
      throw IngestionError("single-column series needs an explicit dt");
    dt = *dt_override;
  }

  return Dataset::from_samples(
      Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size())),
      dt);
}

void write_series_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write series file: " + path);
  out << "t,x\n";
  for (Eigen::Index i = 0; i < data.samples.size(); ++i)
    out << fmt_g(static_cast<double>(i) * data.dt) << ","
        << fmt_g(data.samples[i]) << "\n";
  if (!out) throw IngestionError("failed writing series file: " + path);
}

Eigen::VectorXd load_column(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path, "series file");
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size())
    throw IngestionError("series file is empty: " + path);

  const std::vector<std::string> header = split_fields(lower(lines[first]));
  std::size_t x_col = 0;
  if (header.size() == 2 && header[0] == "t" && header[1] == "x")
    x_col = 1;
  else if (!(header.size() == 1 && header[0] == "x"))
    throw IngestionError("series file needs a 't,x' or 'x' header, got '" +
                         trim(lines[first]) + "'");

  std::vector<double> xs;
  Eigen::Index row = 0;
  for (std::size_t k = first + 1; k < lines.size(); ++k) {
    if (trim(lines[k]).empty()) continue;
    const std::vector<std::string> fields = split_fields(lines[k]);
    if (fields.size() != header.size())
      throw IngestionError("wrong field count at index " + std::to_string(row));
    xs.push_back(parse_number(fields[x_col], "at index " + std::to_string(row)));
    ++row;
  }
  return Eigen::Map<const Eigen::VectorXd>(xs.data(),
                                           static_cast<Eigen::Index>(xs.size()));
}

void write_column_csv(const std::string& path, const Eigen::VectorXd& values) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write series file: " + path);
  out << "x\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) out << fmt_g(values[i]) << "\n";
  if (!out) throw IngestionError("failed writing series file: " + path);
}

Eigen::VectorXd log_returns(const Eigen::VectorXd& prices) {
  if (prices.size() < 2)
    throw PreprocessError("log_returns: need at least 2 prices");
  Eigen::VectorXd out(prices.size() - 1);
  for (Eigen::Index i = 0; i < prices.size(); ++i)
    if (!(prices[i] > 0.0))
      throw PreprocessError("log_returns: non-positive price at index " +
                            std::to_string(i));
  for (Eigen::Index i = 0; i + 1 < prices.size(); ++i)
    out[i] = std::log(prices[i + 1] / prices[i]);
  return out;
}

void save_model(const std::string& path, const FitResult& fit, double dt,
                Eigen::Index n_increments) {
  ordered_json j;
  j["format"] = "sdegp-model";
  j["format_version"] = 1;
  j["kernel_f"] = kernel_to_json(fit.state.kernel_f);
  j["kernel_s"] = kernel_to_json(fit.state.kernel_s);
  j["v"] = fmt_hex(fit.state.v);
  j["pseudo_inputs"] = vector_to_json(fit.state.pseudo_inputs);
  j["mu_f"] = vector_to_json(fit.state.mu_f);
  j["F"] = matrix_to_json(fit.state.F);
  j["mu_s"] = vector_to_json(fit.state.mu_s);
  j["S"] = matrix_to_json(fit.state.S);

  ordered_json dataset;
  dataset["fingerprint"] = fit.dataset_fingerprint;
  dataset["min"] = fmt_hex(fit.data_min);
  dataset["max"] = fmt_hex(fit.data_max);
  dataset["dt"] = fmt_hex(dt);
  dataset["n_increments"] = static_cast<long long>(n_increments);
  j["dataset"] = std::move(dataset);

  ordered_json diag;
  diag["lower_bound"] = fmt_hex(fit.lower_bound_value);
  diag["modified_lower_bound"] = fmt_hex(fit.modified_lower_bound_value);
  diag["converged"] = fit.converged;
  diag["em_iterations"] = fit.em_iterations;
  diag["best_restart"] = fit.best_restart;
  diag["exp_overflows"] = fit.diagnostics.exp_overflows;
  diag["diffusion_nonconverged"] = fit.diagnostics.diffusion_nonconverged;
  diag["rejected_m_steps"] = fit.diagnostics.rejected_m_steps;
  j["fit"] = std::move(diag);

  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write model file: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IngestionError("failed writing model file: " + path);
}

ModelDocument load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open model file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("model file: parse error at byte " + std::to_string(e.byte) +
                     " in " + path);
  }
  if (!j.is_object() || get_field(j, "format").get<std::string>() != "sdegp-model")
    throw ParseError("model file: not an sdegp model document");
  const auto version = get_field(j, "format_version");
  if (!version.is_number_integer() || version.get<int>() != 1)
    throw ParseError("model file: unsupported format_version " + version.dump());

  ModelDocument doc;
  doc.state.kernel_f = kernel_from_json(get_field(j, "kernel_f"), "kernel_f");
  doc.state.kernel_s = kernel_from_json(get_field(j, "kernel_s"), "kernel_s");
  doc.state.v = json_to_double(get_field(j, "v"), "v");
  doc.state.pseudo_inputs = json_to_vector(get_field(j, "pseudo_inputs"), "pseudo_inputs");
  const Eigen::Index m = doc.state.pseudo_inputs.size();
  if (m < 1) throw ParseError("model file: pseudo_inputs is empty");
  doc.state.mu_f = json_to_vector(get_field(j, "mu_f"), "mu_f");
  doc.state.mu_s = json_to_vector(get_field(j, "mu_s"), "mu_s");
  if (doc.state.mu_f.size() != m || doc.state.mu_s.size() != m)
    throw ParseError("model file: inducing moment sizes disagree with pseudo_inputs");
  doc.state.F = json_to_matrix(get_field(j, "F"), "F", m);
  doc.state.S = json_to_matrix(get_field(j, "S"), "S", m);

  const ordered_json& dataset = get_field(j, "dataset");
  doc.dataset_fingerprint = get_field(dataset, "fingerprint").get<std::string>();
  doc.data_min = json_to_double(get_field(dataset, "min"), "min");
  doc.data_max = json_to_double(get_field(dataset, "max"), "max");
  doc.dt = json_to_double(get_field(dataset, "dt"), "dt");
  doc.n_increments = get_field(dataset, "n_increments").get<long long>();

  const ordered_json& diag = get_field(j, "fit");
  doc.lower_bound_value = json_to_double(get_field(diag, "lower_bound"), "lower_bound");
  doc.modified_lower_bound_value =
      json_to_double(get_field(diag, "modified_lower_bound"), "modified_lower_bound");
  doc.converged = get_field(diag, "converged").get<bool>();
  doc.em_iterations = get_field(diag, "em_iterations").get<int>();
  doc.best_restart = get_field(diag, "best_restart").get<int>();
  doc.exp_overflows = get_field(diag, "exp_overflows").get<long>();
  doc.diffusion_nonconverged = get_field(diag, "diffusion_nonconverged").get<int>();
  doc.rejected_m_steps = get_field(diag, "rejected_m_steps").get<int>();

  rebuild_inducing_factors(doc.state);
  return doc;
}

namespace {
constexpr const char* kCurveHeader =
    "x,f_mean,f_var,s_mean,s_var,g_median,g_lower,g_upper,g_mean";
}

void write_curves_csv(const std::string& path, const PosteriorCurve& curve) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write curves file: " + path);
  out << kCurveHeader << "\n";
  for (Eigen::Index i = 0; i < curve.grid.size(); ++i) {
    out << fmt_g(curve.grid[i]) << "," << fmt_g(curve.f_mean[i]) << ","
        << fmt_g(curve.f_var[i]) << "," << fmt_g(curve.s_mean[i]) << ","
        << fmt_g(curve.s_var[i]) << "," << fmt_g(curve.g_median[i]) << ","
        << fmt_g(curve.g_lower[i]) << "," << fmt_g(curve.g_upper[i]) << ","
        << fmt_g(curve.g_mean[i]) << "\n";
  }
  if (!out) throw IngestionError("failed writing curves file: " + path);
}

PosteriorCurve read_curves_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path, "curves file");
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size() || trim(lines[first]) != kCurveHeader)
    throw IngestionError("curves file needs the header '" +
                         std::string(kCurveHeader) + "'");

  std::vector<std::array<double, 9>> rows;
  Eigen::Index row = 0;
  for (std::size_t k = first + 1; k < lines.size(); ++k) {
    if (trim(lines[k]).empty()) continue;
    const std::vector<std::string> fields = split_fields(lines[k]);
    if (fields.size() != 9)
      throw IngestionError("curves file: wrong field count at index " +
                           std::to_string(row));
    std::array<double, 9> vals{};
    for (int c = 0; c < 9; ++c)
      vals[c] = parse_number(fields[c], "at index " + std::to_string(row));
    rows.push_back(vals);
    ++row;
  }
  if (rows.empty()) throw IngestionError("curves file has no rows");

  PosteriorCurve curve;
  const auto n = static_cast<Eigen::Index>(rows.size());
  for (Eigen::VectorXd* v : {&curve.grid, &curve.f_mean, &curve.f_var,
                             &curve.s_mean, &curve.s_var, &curve.g_median,
                             &curve.g_lower, &curve.g_upper, &curve.g_mean})
    v->resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    curve.grid[i] = rows[i][0];
    curve.f_mean[i] = rows[i][1];
    curve.f_var[i] = rows[i][2];
    curve.s_mean[i] = rows[i][3];
    curve.s_var[i] = rows[i][4];
    curve.g_median[i] = rows[i][5];
    curve.g_lower[i] = rows[i][6];
    curve.g_upper[i] = rows[i][7];
    curve.g_mean[i] = rows[i][8];
  }
  curve.ci_level = 0.0;  // not stored in the CSV
  return curve;
}

void write_error_table_csv(const std::string& path, const ErrorTable& table) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write error table: " + path);
  out << "model,estimator,coefficient,replicate,error\n";
  for (const ErrorRecord& r : table.records)
    out << r.model << "," << r.estimator << "," << r.coefficient << ","
        << r.replicate << "," << fmt_g(r.error) << "\n";
  if (!out) throw IngestionError("failed writing error table: " + path);
}

namespace {

long long parse_integer(const std::string& value, const std::string& key) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(begin, &end, 10);
  if (value.empty() || end != begin + value.size())
    throw ConfigError("config: key '" + key + "' needs an integer, got '" +
                      value + "'");
  return v;
}

double parse_real(const std::string& value, const std::string& key) {
  const char* begin = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (value.empty() || end != begin + value.size())
    throw ConfigError("config: key '" + key + "' needs a number, got '" +
                      value + "'");
  return v;
}

KernelFamily parse_family(const std::string& value, const std::string& key) {
  try {
    return family_from_name(value);
  } catch (const UsageError&) {
    throw ConfigError("config: key '" + key + "' needs one of se_const, two_se, "
                      "rational_quadratic; got '" + value + "'");
  }
}

}  // namespace

FitConfig parse_fit_config_text(const std::string& text,
                                const std::string& origin) {
  FitConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected 'key = value' at " + origin + ":" +
                        std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "m") cfg.m = static_cast<int>(parse_integer(value, key));
    else if (key == "restarts") cfg.restarts = static_cast<int>(parse_integer(value, key));
    else if (key == "max_em_iterations")
      cfg.max_em_iterations = static_cast<int>(parse_integer(value, key));
    else if (key == "m_step_inner_iterations")
      cfg.m_step_inner_iterations = static_cast<int>(parse_integer(value, key));
    else if (key == "em_tolerance") cfg.em_tolerance = parse_real(value, key);
    else if (key == "seed")
      cfg.seed = static_cast<std::uint64_t>(parse_integer(value, key));
    else if (key == "threads") cfg.threads = static_cast<int>(parse_integer(value, key));
    else if (key == "kernel_f") cfg.kernel_f = parse_family(value, key);
    else if (key == "kernel_s") cfg.kernel_s = parse_family(value, key);
    else if (key == "amplitude_f") cfg.amplitude_f = parse_real(value, key);
    else if (key == "amplitude_g") cfg.amplitude_g = parse_real(value, key);
    else if (key == "length_scale_min_f") cfg.length_scale_min_f = parse_real(value, key);
    else if (key == "length_scale_max_f") cfg.length_scale_max_f = parse_real(value, key);
    else if (key == "length_scale_min_s") cfg.length_scale_min_s = parse_real(value, key);
    else if (key == "length_scale_max_s") cfg.length_scale_max_s = parse_real(value, key);
    else if (key == "rq_alpha_min") cfg.rq_alpha_min = parse_real(value, key);
    else if (key == "rq_alpha_max") cfg.rq_alpha_max = parse_real(value, key);
    else if (key == "jitter_f") cfg.jitter_f = parse_real(value, key);
    else if (key == "jitter_s") cfg.jitter_s = parse_real(value, key);
    else if (key == "pseudo_input_noise") cfg.pseudo_input_noise = parse_real(value, key);
    else if (key == "heuristic_length_scale")
      cfg.heuristic_length_scale = parse_real(value, key);
    else
      throw ConfigError("config: unknown key '" + key + "' at " + origin + ":" +
                        std::to_string(line_no));
  }
  return cfg;
}

FitConfig parse_fit_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_fit_config_text(buffer.str(), path);
}

}  // namespace sdegp
