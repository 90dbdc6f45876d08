#include "noisecal/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace noisecal {

using nlohmann::json;

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw SchemaError("cannot open file: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw SchemaError("cannot write file: " + path.string());
    }
    out << text;
}

// =============================================================================
// CSV plumbing
// =============================================================================

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // trim surrounding whitespace
        const auto begin = field.find_first_not_of(" \t\r");
        const auto end = field.find_last_not_of(" \t\r");
        fields.push_back(begin == std::string::npos ? std::string()
                                                    : field.substr(begin, end - begin + 1));
    }
    return fields;
}

double parse_double(const std::string& s, std::size_t line_no, const char* column) {
    double value = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        std::ostringstream msg;
        msg << "line " << line_no << ": cannot parse " << column << " value '" << s << "'";
        throw SchemaError(msg.str());
    }
    return value;
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            lines.push_back(line);
        }
    }
    return lines;
}

}  // namespace

// =============================================================================
// Noise curve CSV
// =============================================================================

std::string noise_curves_to_csv(std::span<const NoiseCurve> curves) {
    std::string out = "frequency_hz,setpoint,setpoint_unit,output,output_unit\n";
    for (const NoiseCurve& curve : curves) {
        curve.validate();
        const char* setpoint_unit = curve.source_kind == SourceKind::sntj ? "V" : "K";
        const char* output_unit =
            curve.output_unit == OutputUnit::quanta ? "quanta" : "w_per_hz";
        for (std::size_t i = 0; i < curve.setpoints.size(); ++i) {
            out += format_double(curve.frequency_hz);
            out += ',';
            out += format_double(curve.setpoints[i]);
            out += ',';
            out += setpoint_unit;
            out += ',';
            out += format_double(curve.outputs[i]);
            out += ',';
            out += output_unit;
            out += '\n';
        }
    }
    return out;
}

std::vector<NoiseCurve> noise_curves_from_csv(const std::string& text,
                                              double physical_temperature_k) {
    const auto lines = csv_lines(text);
    if (lines.empty()) {
        throw SchemaError("empty noise-curve file");
    }
    const auto header = split_csv_line(lines[0]);
    const std::vector<std::string> expected{"frequency_hz", "setpoint", "setpoint_unit",
                                            "output", "output_unit"};
    if (header != expected) {
        throw SchemaError(
            "noise-curve header must be "
            "'frequency_hz,setpoint,setpoint_unit,output,output_unit'");
    }

    std::vector<NoiseCurve> curves;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = split_csv_line(lines[li]);
        if (fields.size() != 5) {
            std::ostringstream msg;
            msg << "line " << li + 1 << ": expected 5 fields, got " << fields.size();
            throw SchemaError(msg.str());
        }
        const double freq = parse_double(fields[0], li + 1, "frequency_hz");
        const double setpoint = parse_double(fields[1], li + 1, "setpoint");
        const double output = parse_double(fields[3], li + 1, "output");

        SourceKind kind;
        if (fields[2] == "V") {
            kind = SourceKind::sntj;
        } else if (fields[2] == "K") {
            kind = SourceKind::vts;
        } else {
            std::ostringstream msg;
            msg << "line " << li + 1 << ": setpoint_unit must be V or K, got '" << fields[2]
                << "'";
            throw SchemaError(msg.str());
        }
        OutputUnit unit;
        if (fields[4] == "quanta") {
            unit = OutputUnit::quanta;
        } else if (fields[4] == "w_per_hz") {
            unit = OutputUnit::watts_per_hz;
        } else {
            std::ostringstream msg;
            msg << "line " << li + 1 << ": output_unit must be quanta or w_per_hz, got '"
                << fields[4] << "'";
            throw SchemaError(msg.str());
        }

        NoiseCurve* curve = nullptr;
        for (NoiseCurve& c : curves) {
            if (c.frequency_hz == freq) {
                curve = &c;
                break;
            }
        }
        if (curve == nullptr) {
            curves.emplace_back();
            curve = &curves.back();
            curve->frequency_hz = freq;
            curve->source_kind = kind;
            curve->output_unit = unit;
            curve->physical_temperature_k = physical_temperature_k;
        } else if (curve->source_kind != kind || curve->output_unit != unit) {
            std::ostringstream msg;
            msg << "line " << li + 1 << ": units change within the curve at "
                << format_double(freq) << " Hz";
            throw SchemaError(msg.str());
        }
        curve->setpoints.push_back(setpoint);
        curve->outputs.push_back(output);
    }
    for (NoiseCurve& c : curves) {
        try {
            c.validate();
        } catch (const std::invalid_argument& e) {
            throw SchemaError(std::string("invalid curve at ") + format_double(c.frequency_hz) +
                              " Hz: " + e.what());
        }
    }
    return curves;
}

void write_noise_curves(const std::filesystem::path& path, std::span<const NoiseCurve> curves) {
    write_text_file(path, noise_curves_to_csv(curves));
}

std::vector<NoiseCurve> read_noise_curves(const std::filesystem::path& path,
                                          double physical_temperature_k) {
    return noise_curves_from_csv(read_text_file(path), physical_temperature_k);
}

// =============================================================================
// Chain JSON
// =============================================================================

namespace {
constexpr const char* kChainSchema = "noisecal.chain/1";
}

std::string chain_to_json(std::span<const ChainStage> stages) {
    json doc;
    doc["schema"] = kChainSchema;
    json list = json::array();
    for (const ChainStage& stage : stages) {
        if (stage.loss.efficiency != 1.0 || stage.loss.temperature_k != 0.0) {
            list.push_back({{"kind", "loss"},
                            {"efficiency", stage.loss.efficiency},
                            {"temperature_k", stage.loss.temperature_k}});
        }
        if (stage.amplifier.gain != 1.0 || stage.amplifier.added_noise != 0.0) {
            list.push_back({{"kind", "amplifier"},
                            {"gain", stage.amplifier.gain},
                            {"added_noise_quanta", stage.amplifier.added_noise}});
        }
    }
    doc["stages"] = std::move(list);
    return doc.dump(2) + "\n";
}

std::vector<ChainStage> chain_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("chain document: ") + e.what());
    }
    if (!doc.contains("schema") || doc["schema"] != kChainSchema) {
        throw SchemaError(std::string("chain document must declare schema ") + kChainSchema);
    }
    if (!doc.contains("stages") || !doc["stages"].is_array() || doc["stages"].empty()) {
        throw SchemaError("chain document needs a non-empty 'stages' array");
    }

    // Canonical pairing: a loss binds to the amplifier that follows it; bare
    // elements pick up a unit partner.
    std::vector<ChainStage> stages;
    std::optional<LossStage> pending_loss;
    for (const json& item : doc["stages"]) {
        const std::string kind = item.value("kind", "");
        if (kind == "loss") {
            if (pending_loss) {
                stages.push_back(ChainStage{*pending_loss, AmplifierStage{1.0, 0.0}});
            }
            LossStage loss;
            if (!item.contains("efficiency")) {
                throw SchemaError("loss stage needs 'efficiency'");
            }
            loss.efficiency = item["efficiency"].get<double>();
            loss.temperature_k = item.value("temperature_k", 0.0);
            pending_loss = loss;
        } else if (kind == "amplifier") {
            AmplifierStage amp;
            if (!item.contains("gain")) {
                throw SchemaError("amplifier stage needs 'gain'");
            }
            amp.gain = item["gain"].get<double>();
            amp.added_noise = item.value("added_noise_quanta", 0.0);
            stages.push_back(
                ChainStage{pending_loss.value_or(LossStage{1.0, 0.0}), amp});
            pending_loss.reset();
        } else {
            throw SchemaError("stage kind must be 'loss' or 'amplifier', got '" + kind + "'");
        }
    }
    if (pending_loss) {
        stages.push_back(ChainStage{*pending_loss, AmplifierStage{1.0, 0.0}});
    }
    return stages;
}

std::vector<ChainStage> read_chain(const std::filesystem::path& path) {
    return chain_from_json(read_text_file(path));
}

// =============================================================================
// Compression curve CSV
// =============================================================================

CompressionCurve compression_from_csv(const std::string& text) {
    const auto lines = csv_lines(text);
    if (lines.size() < 2) {
        throw SchemaError("compression file needs a header and at least two samples");
    }
    const auto header = split_csv_line(lines[0]);
    if (header.size() != 2 || header[0] != "bias_v" ||
        (header[1] != "lambda" && header[1] != "gain_db")) {
        throw SchemaError("compression header must be 'bias_v,lambda' or 'bias_v,gain_db'");
    }
    const bool is_gain = header[1] == "gain_db";
    std::vector<double> bias;
    std::vector<double> value;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = split_csv_line(lines[li]);
        if (fields.size() != 2) {
            std::ostringstream msg;
            msg << "line " << li + 1 << ": expected 2 fields";
            throw SchemaError(msg.str());
        }
        bias.push_back(parse_double(fields[0], li + 1, "bias_v"));
        value.push_back(parse_double(fields[1], li + 1, header[1].c_str()));
    }
    try {
        return is_gain ? CompressionCurve::from_gain_db(std::move(bias), std::move(value))
                       : CompressionCurve::from_lambda(std::move(bias), std::move(value));
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("compression file: ") + e.what());
    }
}

CompressionCurve read_compression(const std::filesystem::path& path) {
    return compression_from_csv(read_text_file(path));
}

std::string compression_to_csv(const CompressionCurve& curve) {
    std::string out = "bias_v,lambda\n";
    for (std::size_t i = 0; i < curve.biases().size(); ++i) {
        out += format_double(curve.biases()[i]);
        out += ',';
        out += format_double(curve.lambdas()[i]);
        out += '\n';
    }
    return out;
}

// =============================================================================
// Fit result JSON and residual CSV
// =============================================================================

namespace {

const char* model_kind_name(FitModelKind kind) {
    switch (kind) {
        case FitModelKind::single_input:
            return "single_input";
        case FitModelKind::two_input:
            return "two_input";
        case FitModelKind::two_input_saturated:
            return "two_input_saturated";
        case FitModelKind::ps_quadrature:
            return "ps_quadrature";
    }
    return "unknown";
}

json window_to_json(const FitWindow& w) {
    json out;
    if (std::isfinite(w.width_quanta)) {
        out["width_quanta"] = w.width_quanta;
    } else {
        out["width_quanta"] = nullptr;
    }
    out["setpoint_min"] = w.setpoint_min;
    out["setpoint_max"] = w.setpoint_max;
    out["point_count"] = w.point_count;
    return out;
}

}  // namespace

std::string fit_result_to_json(const FitResult& fit) {
    json doc;
    doc["schema"] = "noisecal.fit_result/1";
    doc["model"] = model_kind_name(fit.kind);
    doc["source"] = fit.source_kind == SourceKind::sntj ? "sntj" : "vts";
    doc["frequency_hz"] = fit.frequency_hz;
    doc["g_sys"] = fit.g_sys;
    doc["g_sys_stderr"] = fit.g_sys_err;
    doc["noise_quanta"] = fit.noise;
    doc["noise_stderr"] = fit.noise_err;
    doc["v_offs"] = fit.v_offs;
    doc["v_offs_stderr"] = fit.v_offs_err;
    doc["t_e_k"] = fit.t_e;
    doc["t_e_stderr"] = fit.t_e_err;
    doc["system_added_noise_quanta"] = fit.system_added_noise();
    if (fit.kind == FitModelKind::two_input_saturated) {
        doc["n2_over_g1_quanta"] = fit.n2_over_g1;
    }
    doc["window"] = window_to_json(fit.window);
    doc["residual_lag1_autocorr"] = fit.residual_lag1_autocorr;
    doc["iterations"] = fit.iterations;
    doc["converged"] = fit.converged;
    doc["bound_active"] = fit.bound_active;
    doc["branch_inconsistent"] = fit.branch_inconsistent;
    doc["residuals"] = fit.residuals;
    return doc.dump(2) + "\n";
}

void write_fit_result(const std::filesystem::path& path, const FitResult& fit) {
    write_text_file(path, fit_result_to_json(fit));
}

std::string fit_residuals_to_csv(const FitResult& fit, const NoiseCurve& curve) {
    const NoiseCurve q = curve.in_quanta();
    std::string out = "setpoint,data_quanta,model_quanta,fractional_residual\n";
    // Residuals are stored over the fitted subset in setpoint order; rebuild
    // the subset from the window bounds.
    std::size_t k = 0;
    for (std::size_t i = 0; i < q.setpoints.size() && k < fit.residuals.size(); ++i) {
        const double s = q.setpoints[i];
        if (s < fit.window.setpoint_min || s > fit.window.setpoint_max) {
            continue;
        }
        const double data = q.outputs[i];
        const double model = data * (1.0 + fit.residuals[k]);
        out += format_double(s);
        out += ',';
        out += format_double(data);
        out += ',';
        out += format_double(model);
        out += ',';
        out += format_double(fit.residuals[k]);
        out += '\n';
        ++k;
    }
    return out;
}

// =============================================================================
// Spectral exports
// =============================================================================

std::string spectral_result_to_csv(const SpectralResult& result) {
    std::string out =
        "frequency_hz,g_sys,g_sys_stderr,noise_quanta,noise_stderr,n_sys_quanta,ok\n";
    for (std::size_t i = 0; i < result.size(); ++i) {
        out += format_double(result.frequencies_hz[i]);
        out += ',';
        out += format_double(result.g_sys[i]);
        out += ',';
        out += format_double(result.g_sys_err[i]);
        out += ',';
        out += format_double(result.noise[i]);
        out += ',';
        out += format_double(result.noise_err[i]);
        out += ',';
        out += format_double(result.n_sys[i]);
        out += ',';
        out += result.ok[i] ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::string spectral_result_to_json(const SpectralResult& result) {
    json doc;
    doc["schema"] = "noisecal.spectrum/1";
    doc["model"] = model_kind_name(result.kind);
    doc["frequencies_hz"] = result.frequencies_hz;
    doc["g_sys"] = result.g_sys;
    doc["g_sys_stderr"] = result.g_sys_err;
    doc["noise_quanta"] = result.noise;
    doc["noise_stderr"] = result.noise_err;
    doc["n_sys_quanta"] = result.n_sys;
    doc["ok"] = result.ok;
    doc["errors"] = result.errors;
    return doc.dump(2) + "\n";
}

std::string efficiency_spectrum_to_csv(std::span<const double> frequencies_hz,
                                       std::span<const TransmissionEfficiency> etas) {
    if (frequencies_hz.size() != etas.size()) {
        throw std::invalid_argument("efficiency export: size mismatch");
    }
    std::string out = "frequency_hz,eta,insertion_loss_db,inconsistent\n";
    for (std::size_t i = 0; i < etas.size(); ++i) {
        out += format_double(frequencies_hz[i]);
        out += ',';
        out += format_double(etas[i].eta);
        out += ',';
        out += format_double(etas[i].insertion_loss_db);
        out += ',';
        out += etas[i].inconsistent ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::string corrected_spectrum_to_csv(std::span<const CorrectedBin> bins) {
    std::string out = "frequency_hz,n_sys_corrected_quanta,unphysical,ok\n";
    for (const CorrectedBin& bin : bins) {
        out += format_double(bin.frequency_hz);
        out += ',';
        out += format_double(bin.n_sys_corrected);
        out += ',';
        out += bin.unphysical ? '1' : '0';
        out += ',';
        out += bin.ok ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::string window_sweep_to_csv(std::span<const FitResult> results) {
    std::string out =
        "width_quanta,g_sys,g_sys_stderr,noise_quanta,noise_stderr,n_sys_quanta,"
        "residual_lag1_autocorr,point_count,bound_active,converged\n";
    for (const FitResult& fit : results) {
        out += format_double(fit.window.width_quanta);
        out += ',';
        out += format_double(fit.g_sys);
        out += ',';
        out += format_double(fit.g_sys_err);
        out += ',';
        out += format_double(fit.noise);
        out += ',';
        out += format_double(fit.noise_err);
        out += ',';
        out += format_double(fit.system_added_noise());
        out += ',';
        out += format_double(fit.residual_lag1_autocorr);
        out += ',';
        out += std::to_string(fit.window.point_count);
        out += ',';
        out += fit.bound_active ? '1' : '0';
        out += ',';
        out += fit.converged ? '1' : '0';
        out += '\n';
    }
    return out;
}

}  // namespace noisecal
