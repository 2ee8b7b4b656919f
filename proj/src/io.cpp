#include "xtrem/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "xtrem/errors.hpp"

namespace xtrem {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(first, last - first + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
            current.push_back(c);
        } else if (c == ',' && !quoted) {
            fields.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(trim(current));
    return fields;
}

Count parse_count(const std::string& text, const char* field, std::size_t line) {
    Count value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
        throw ValidationError("line " + std::to_string(line) + ": field '" + field + "' = '" + text +
                              "' is not an integer");
    }
    return value;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_document(const Json& doc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Json num(double v) { return round_significant(v); }

Json optional_num(const std::optional<double>& v) { return v ? num(*v) : Json(nullptr); }

Json envelope(const char* kind, Json result, const Provenance& prov) {
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["tool"] = {{"name", "xtrem"}, {"version", kToolVersion}};
    doc["kind"] = kind;
    doc["provenance"] = {
        {"input_checksum", prov.input_checksum.empty() ? Json(nullptr) : Json(prov.input_checksum)},
        {"threshold_spec", prov.threshold_spec.empty() ? Json(nullptr) : Json(prov.threshold_spec)},
        {"rng", prov.rng ? Json(*prov.rng) : Json(nullptr)},
        {"seed", prov.seed ? Json(*prov.seed) : Json(nullptr)},
    };
    doc["result"] = std::move(result);
    return doc;
}

Json to_json(const Threshold& t) {
    Json j;
    j["kind"] = t.kind() == ThresholdKind::Fixed ? "fixed" : "dynamic";
    j["value"] = num(t.value());
    j["percentile_z"] = num(t.percentile_z());
    const auto src = t.source();
    j["source_mu"] = src ? num(src->first) : Json(nullptr);
    j["source_tau"] = src ? num(src->second) : Json(nullptr);
    return j;
}

Threshold threshold_from_json(const Json& j) {
    if (j.at("kind").get<std::string>() == "fixed") {
        return Threshold::fixed(j.at("value").get<double>());
    }
    return Threshold::dynamic(j.at("source_mu").get<double>(), j.at("source_tau").get<double>(),
                              j.at("percentile_z").get<double>());
}

template <typename F>
auto parse_guard(const char* what, F&& f) {
    try {
        return f();
    } catch (const Json::exception& e) {
        throw IoError(std::string("malformed ") + what + " document: " + e.what());
    }
}

} // namespace

double round_significant(double value, int digits) {
    if (value == 0.0 || !std::isfinite(value)) return value;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, value);
    return std::strtod(buf, nullptr);
}

Dataset parse_dataset(std::istream& in, const std::string& label) {
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> col_study, col_events, col_size;
    std::size_t needed = 0;
    bool have_header = false;
    std::vector<StudyRecord> studies;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const auto fields = split_csv(line);
        if (!have_header) {
            for (std::size_t c = 0; c < fields.size(); ++c) {
                std::string name = fields[c];
                std::transform(name.begin(), name.end(), name.begin(),
                               [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
                if (name == "study") col_study = c;
                if (name == "events") col_events = c;
                if (name == "size") col_size = c;
            }
            if (!col_study || !col_events || !col_size) {
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": header must contain the columns study,events,size");
            }
            needed = std::max({*col_study, *col_events, *col_size}) + 1;
            have_header = true;
            continue;
        }
        if (fields.size() < needed) {
            throw ValidationError("line " + std::to_string(line_no) + ": expected at least " +
                                  std::to_string(needed) + " fields, found " +
                                  std::to_string(fields.size()));
        }
        const std::string& id = fields[*col_study];
        const Count events = parse_count(fields[*col_events], "events", line_no);
        const Count size = parse_count(fields[*col_size], "size", line_no);
        try {
            studies.emplace_back(events, size, id);
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw ValidationError("dataset '" + label + "': missing header row");
    return Dataset(std::move(studies), label);
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    return parse_dataset(in, path.stem().string());
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw IoError("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

std::string file_checksum(const std::filesystem::path& path) {
    return "sha256:" + sha256_hex(read_file(path));
}

Json to_json(const Segmentation& seg) {
    Json j;
    j["n_total"] = seg.n_total();
    j["bulk_indices"] = seg.bulk_indices();
    j["tail_indices"] = seg.tail_indices();
    Json ex = Json::array();
    for (double y : seg.excesses()) ex.push_back(num(y));
    j["excesses"] = std::move(ex);
    j["threshold"] = to_json(seg.threshold());
    return j;
}

Segmentation segmentation_from_json(const Json& j) {
    return Segmentation(j.at("bulk_indices").get<std::vector<std::size_t>>(),
                        j.at("tail_indices").get<std::vector<std::size_t>>(),
                        j.at("excesses").get<std::vector<double>>(),
                        threshold_from_json(j.at("threshold")), j.at("n_total").get<std::size_t>());
}

Json to_json(const FitResult& fit) {
    Json j;
    j["model"] = to_string(fit.model());
    j["dataset_label"] = fit.dataset_label();
    j["k_params"] = fit.k_params();
    j["loglik"] = num(fit.loglik());
    j["aic"] = num(fit.aic());
    j["aggregate_proportion"] = num(fit.aggregate_proportion());
    j["rem"] = {{"mu", num(fit.rem().mu())}, {"tau2", num(fit.rem().tau2())}};
    if (fit.gpd()) {
        j["gpd"] = {{"xi", num(fit.gpd()->xi())}, {"beta", num(fit.gpd()->beta())}};
        Json qs = Json::array();
        for (const auto& q : fit.diag.tail_quantiles) {
            qs.push_back({{"percentile", num(q.percentile)}, {"value", num(q.value)},
                          {"clamped", q.clamped}});
        }
        j["tail_quantiles"] = std::move(qs);
    } else {
        j["gpd"] = nullptr;
        j["tail_quantiles"] = nullptr;
    }
    const auto& d = fit.diag;
    j["ci95_mu"] = {{"low", num(d.ci95_mu.low)}, {"high", num(d.ci95_mu.high)}};
    j["se_mu"] = num(d.se_mu);
    j["converged"] = d.converged;
    j["n_iterations"] = d.n_iterations;
    j["degraded_to_rem"] = d.degraded_to_rem;
    j["low_tail_sample"] = d.low_tail_sample;
    j["warnings"] = d.warnings;
    j["threshold"] = d.threshold ? to_json(*d.threshold) : Json(nullptr);
    j["segmentation"] = d.segmentation ? to_json(*d.segmentation) : Json(nullptr);
    return j;
}

FitResult fit_result_from_json(const Json& j) {
    return parse_guard("fit", [&] {
        std::optional<GpdParams> gpd;
        if (!j.at("gpd").is_null()) {
            gpd = GpdParams(j.at("gpd").at("xi").get<double>(), j.at("gpd").at("beta").get<double>());
        }
        FitResult fit(model_kind_from_string(j.at("model").get<std::string>()),
                      j.at("dataset_label").get<std::string>(),
                      RemParams(j.at("rem").at("mu").get<double>(), j.at("rem").at("tau2").get<double>()),
                      gpd, j.at("loglik").get<double>());
        if (j.at("k_params").get<int>() != fit.k_params()) {
            throw IoError("fit document: k_params disagrees with the stored parameters");
        }
        auto& d = fit.diag;
        if (!j.at("tail_quantiles").is_null()) {
            for (const auto& q : j.at("tail_quantiles")) {
                d.tail_quantiles.push_back({q.at("percentile").get<double>(), q.at("value").get<double>(),
                                            q.at("clamped").get<bool>()});
            }
        }
        d.ci95_mu = {j.at("ci95_mu").at("low").get<double>(), j.at("ci95_mu").at("high").get<double>()};
        d.se_mu = j.at("se_mu").get<double>();
        d.converged = j.at("converged").get<bool>();
        d.n_iterations = j.at("n_iterations").get<int>();
        d.degraded_to_rem = j.at("degraded_to_rem").get<bool>();
        d.low_tail_sample = j.at("low_tail_sample").get<bool>();
        d.warnings = j.at("warnings").get<std::vector<std::string>>();
        if (!j.at("threshold").is_null()) d.threshold = threshold_from_json(j.at("threshold"));
        if (!j.at("segmentation").is_null()) d.segmentation = segmentation_from_json(j.at("segmentation"));
        return fit;
    });
}

Json to_json(const ComparisonReport& report) {
    Json j;
    j["dataset_label"] = report.dataset_label;
    j["first"] = to_json(report.first);
    j["second"] = to_json(report.second);
    j["delta_aic"] = num(report.delta_aic);
    j["delta_loglik"] = num(report.delta_loglik);
    switch (report.preferred) {
    case Preference::First:
        j["preferred"] = "first";
        break;
    case Preference::Second:
        j["preferred"] = "second";
        break;
    case Preference::Tie:
        j["preferred"] = "tie";
        break;
    }
    const FitResult* best = report.preferred_fit();
    j["preferred_model"] = best ? Json(to_string(best->model())) : Json(nullptr);
    return j;
}

ComparisonReport comparison_from_json(const Json& j) {
    return parse_guard("comparison", [&] {
        const std::string pref = j.at("preferred").get<std::string>();
        ComparisonReport r{j.at("dataset_label").get<std::string>(), fit_result_from_json(j.at("first")),
                           fit_result_from_json(j.at("second")), j.at("delta_aic").get<double>(),
                           j.at("delta_loglik").get<double>(), Preference::Tie};
        if (pref == "first") r.preferred = Preference::First;
        else if (pref == "second") r.preferred = Preference::Second;
        else if (pref != "tie") throw IoError("comparison document: unknown preference '" + pref + "'");
        return r;
    });
}

Json to_json(const SimMetrics& m) {
    Json j;
    j["model"] = to_string(m.model);
    j["n_used"] = m.n_used;
    j["n_failed"] = m.n_failed;
    j["n_nonconverged"] = m.n_nonconverged;
    j["bias"] = num(m.bias);
    j["rmse"] = num(m.rmse);
    j["variance"] = num(m.variance);
    j["mean_aic"] = num(m.mean_aic);
    j["mean_loglik"] = num(m.mean_loglik);
    j["coverage95"] = num(m.coverage95);
    j["mean_tail_q99"] = optional_num(m.mean_tail_q99);
    j["n_tail_q99"] = m.n_tail_q99;
    return j;
}

SimMetrics sim_metrics_from_json(const Json& j) {
    return parse_guard("metrics", [&] {
        SimMetrics m;
        m.model = model_kind_from_string(j.at("model").get<std::string>());
        m.n_used = j.at("n_used").get<std::size_t>();
        m.n_failed = j.at("n_failed").get<std::size_t>();
        m.n_nonconverged = j.at("n_nonconverged").get<std::size_t>();
        m.bias = j.at("bias").get<double>();
        m.rmse = j.at("rmse").get<double>();
        m.variance = j.at("variance").get<double>();
        m.mean_aic = j.at("mean_aic").get<double>();
        m.mean_loglik = j.at("mean_loglik").get<double>();
        m.coverage95 = j.at("coverage95").get<double>();
        if (!j.at("mean_tail_q99").is_null()) m.mean_tail_q99 = j.at("mean_tail_q99").get<double>();
        m.n_tail_q99 = j.at("n_tail_q99").get<std::size_t>();
        return m;
    });
}

Json to_json(const SimScenario& s) {
    Json j;
    j["name"] = s.name;
    j["k_studies"] = s.k_studies;
    j["n_low"] = s.n_low;
    j["n_high"] = s.n_high;
    j["mu"] = num(s.mu);
    j["tau"] = num(s.tau);
    j["threshold_u"] = num(s.threshold_u);
    j["extreme_prob"] = num(s.extreme_prob);
    j["xi"] = num(s.gpd.xi());
    j["beta"] = num(s.gpd.beta());
    j["replications"] = s.replications;
    j["seed"] = s.seed;
    j["extreme_mode"] = to_string(s.extreme_mode);
    return j;
}

SimScenario scenario_from_json(const Json& j, const SimScenario& base) {
    return parse_guard("scenario", [&] {
        if (!j.is_object()) throw ValidationError("scenario config must be a JSON object");
        static const std::vector<std::string> known{
            "name", "k_studies", "n_low", "n_high", "mu", "tau", "threshold_u", "extreme_prob",
            "xi", "beta", "replications", "seed", "extreme_mode"};
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                throw ValidationError("scenario config: unknown field '" + key + "'");
            }
        }
        SimScenario s = base;
        s.name = j.value("name", s.name);
        s.k_studies = j.value("k_studies", s.k_studies);
        s.n_low = j.value("n_low", s.n_low);
        s.n_high = j.value("n_high", s.n_high);
        s.mu = j.value("mu", s.mu);
        s.tau = j.value("tau", s.tau);
        s.threshold_u = j.value("threshold_u", s.threshold_u);
        s.extreme_prob = j.value("extreme_prob", s.extreme_prob);
        s.gpd = GpdParams(j.value("xi", s.gpd.xi()), j.value("beta", s.gpd.beta()));
        s.replications = j.value("replications", s.replications);
        s.seed = j.value("seed", s.seed);
        if (j.contains("extreme_mode")) {
            s.extreme_mode = extreme_mode_from_string(j.at("extreme_mode").get<std::string>());
        }
        s.validate();
        return s;
    });
}

Json to_json(const MonteCarloResult& r) {
    Json j;
    j["scenario"] = to_json(r.scenario);
    j["true_proportion"] = num(r.scenario.true_proportion());
    j["rem"] = to_json(r.rem);
    j["xtrem"] = to_json(r.xtrem);
    j["unstable"] = r.unstable;
    j["rng"] = r.rng;
    return j;
}

MonteCarloResult monte_carlo_from_json(const Json& j) {
    return parse_guard("simulation", [&] {
        MonteCarloResult r;
        r.scenario = scenario_from_json(j.at("scenario"));
        r.rem = sim_metrics_from_json(j.at("rem"));
        r.xtrem = sim_metrics_from_json(j.at("xtrem"));
        r.unstable = j.at("unstable").get<bool>();
        r.rng = j.at("rng").get<std::string>();
        return r;
    });
}

void write_result(const FitResult& fit, const std::filesystem::path& path, const Provenance& prov) {
    write_document(envelope("fit", to_json(fit), prov), path);
}

void write_result(const ComparisonReport& report, const std::filesystem::path& path,
                  const Provenance& prov) {
    write_document(envelope("comparison", to_json(report), prov), path);
}

void write_result(const MonteCarloResult& result, const std::filesystem::path& path,
                  const Provenance& prov) {
    Provenance p = prov;
    if (!p.rng) p.rng = result.rng;
    if (!p.seed) p.seed = result.scenario.seed;
    write_document(envelope("simulation", to_json(result), p), path);
}

Json read_result_document(const std::filesystem::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    if (!doc.contains("schema_version") || doc.at("schema_version") != kSchemaVersion) {
        throw IoError("'" + path.string() + "': unsupported schema version");
    }
    return doc;
}

void write_replications_csv(const MonteCarloResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.precision(12);
    out << "scenario,replication,n_tail,rem_ok,rem_estimate,rem_loglik,rem_aic,rem_covers,"
           "xtrem_ok,xtrem_estimate,xtrem_loglik,xtrem_aic,xtrem_covers,degraded,tail_q99\n";
    for (const auto& r : result.replications) {
        out << result.scenario.name << ',' << r.replication << ',' << r.n_tail << ',' << r.rem_ok << ','
            << r.rem_estimate << ',' << r.rem_loglik << ',' << r.rem_aic << ',' << r.rem_covers << ','
            << r.xtrem_ok << ',' << r.xtrem_estimate << ',' << r.xtrem_loglik << ',' << r.xtrem_aic
            << ',' << r.xtrem_covers << ',' << r.degraded << ',';
        if (r.tail_q99) out << *r.tail_q99;
        out << '\n';
    }
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

} // namespace xtrem
