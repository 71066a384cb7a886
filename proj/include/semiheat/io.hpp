#pragma once

// Deterministic artifacts: atomic file writes, versioned CSV tables,
// hand-emitted SVG line plots, run manifests and binary field bundles.

#include "semiheat/pam.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace semiheat {

inline constexpr const char* kToolVersion = "0.1.0";

/// Writes `bytes` to `path` via a sibling temporary and rename.
inline void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw ValidationError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// CSV table whose first line names the schema and its version:
///   # schema=<name> version=<v>
class CsvTable {
public:
    CsvTable(std::string schema, int version, std::vector<std::string> columns)
        : schema_(std::move(schema)), version_(version), columns_(std::move(columns)) {}

    class Row {
    public:
        explicit Row(CsvTable& t) : table_(t) {}
        Row& operator<<(double v) { cells_.push_back(format_double(v)); return *this; }
        Row& operator<<(int v) { cells_.push_back(std::to_string(v)); return *this; }
        Row& operator<<(std::size_t v) { cells_.push_back(std::to_string(v)); return *this; }
        Row& operator<<(bool v) { cells_.push_back(v ? "1" : "0"); return *this; }
        Row& operator<<(const std::string& v) { cells_.push_back(v); return *this; }
        Row& operator<<(const char* v) { cells_.push_back(v); return *this; }
        ~Row() { table_.add(std::move(cells_)); }

    private:
        CsvTable& table_;
        std::vector<std::string> cells_;
    };

    Row row() { return Row(*this); }

    void add(std::vector<std::string> cells) {
        require(cells.size() == columns_.size(), "csv " + schema_ + ": row has wrong number of cells");
        rows_.push_back(std::move(cells));
    }

    std::string str() const {
        std::ostringstream out;
        out << "# schema=" << schema_ << " version=" << version_ << "\n";
        write_line(out, columns_);
        for (const auto& r : rows_) write_line(out, r);
        return out.str();
    }

    std::size_t size() const { return rows_.size(); }

private:
    static void write_line(std::ostringstream& out, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string& c = cells[i];
            bool quote = c.find_first_of(",\"\n") != std::string::npos;
            if (i) out << ',';
            if (quote) {
                out << '"';
                for (char ch : c) out << (ch == '"' ? "\"\"" : std::string(1, ch));
                out << '"';
            } else {
                out << c;
            }
        }
        out << "\n";
    }

    std::string schema_;
    int version_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// Parsed CSV: header names and string cells; schema line skipped.
struct CsvData {
    std::string schema;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        throw ValidationError("csv: missing column '" + name + "'");
    }
    std::vector<double> numbers(const std::string& name) const {
        int c = column(name);
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(std::strtod(r[static_cast<std::size_t>(c)].c_str(), nullptr));
        return v;
    }
};

inline CsvData parse_csv(const std::string& text) {
    CsvData d;
    std::istringstream in(text);
    std::string line;
    auto split_line = [](const std::string& l) {
        std::vector<std::string> cells;
        std::string cur;
        bool q = false;
        for (std::size_t i = 0; i < l.size(); ++i) {
            char ch = l[i];
            if (q) {
                if (ch == '"' && i + 1 < l.size() && l[i + 1] == '"') { cur += '"'; ++i; }
                else if (ch == '"') q = false;
                else cur += ch;
            } else if (ch == '"') {
                q = true;
            } else if (ch == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        cells.push_back(cur);
        return cells;
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto p = line.find("schema=");
            if (p != std::string::npos) d.schema = line.substr(p + 7, line.find(' ', p) - p - 7);
            continue;
        }
        if (d.columns.empty()) d.columns = split_line(line);
        else d.rows.push_back(split_line(line));
    }
    return d;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
    bool dashed = false;
};

struct PlotSpec {
    std::string title, x_label, y_label;
    bool log_x = false, log_y = false;
    std::vector<PlotSeries> series;
    std::vector<std::string> notes;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

inline std::string fixed(double v, int digits = 2) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(digits) << v;
    return o.str();
}

}  // namespace detail

/// Line plot with axes, ticks at the data range ends and a legend.
inline std::string render_svg(const PlotSpec& p) {
    const double W = 640, H = 420, L = 70, R = 170, Tm = 40, B = 50;
    auto tx = [&](double v) { return p.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return p.log_y ? std::log10(v) : v; };
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : p.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if ((p.log_x && s.x[i] <= 0) || (p.log_y && s.y[i] <= 0)) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    auto px = [&](double v) { return L + (tx(v) - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double v) { return H - B - (ty(v) - ymin) / (ymax - ymin) * (H - Tm - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << detail::svg_escape(p.title) << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    auto tick_label = [](double v, bool lg) { return lg ? "1e" + detail::fixed(v, 1) : detail::fixed(v, 3); };
    o << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << tick_label(xmin, p.log_x) << "</text>\n";
    o << "<text x=\"" << W - R << "\" y=\"" << H - B + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(xmax, p.log_x)
      << "</text>\n";
    o << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << tick_label(ymin, p.log_y) << "</text>\n";
    o << "<text x=\"" << L - 4 << "\" y=\"" << Tm + 10
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(ymax, p.log_y)
      << "</text>\n";
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << detail::svg_escape(p.x_label)
      << "</text>\n";
    o << "<text x=\"16\" y=\"" << (Tm + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (Tm + H - B) / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << detail::svg_escape(p.y_label)
      << "</text>\n";
    for (std::size_t k = 0; k < p.series.size(); ++k) {
        const auto& s = p.series[k];
        const char* col = colors[k % 6];
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.8\"";
        if (s.dashed) o << " stroke-dasharray=\"6 4\"";
        o << " points=\"";
        bool first = true;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if ((p.log_x && s.x[i] <= 0) || (p.log_y && s.y[i] <= 0)) continue;
            o << (first ? "" : " ") << detail::fixed(px(s.x[i])) << ',' << detail::fixed(py(s.y[i]));
            first = false;
        }
        o << "\"/>\n";
        double ly = Tm + 20 + 18.0 * static_cast<double>(k);
        o << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 34 << "\" y2=\"" << ly
          << "\" stroke=\"" << col << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
          << "/>\n";
        o << "<text x=\"" << W - R + 40 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
          << detail::svg_escape(s.label) << "</text>\n";
    }
    for (std::size_t k = 0; k < p.notes.size(); ++k)
        o << "<text x=\"" << W - R + 12 << "\" y=\"" << H - B - 18.0 * static_cast<double>(p.notes.size() - 1 - k)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << detail::svg_escape(p.notes[k]) << "</text>\n";
    o << "</svg>\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// manifest.json in the output directory: config snapshot, graph hash, tool
/// version, per-command timings and a checksum per artifact.
class Manifest {
public:
    explicit Manifest(std::filesystem::path dir) : dir_(std::move(dir)) {
        auto p = dir_ / "manifest.json";
        if (std::filesystem::exists(p)) {
            try {
                doc_ = nlohmann::json::parse(read_file(p));
            } catch (const nlohmann::json::exception&) {
                throw ValidationError("manifest.json is not valid JSON");
            }
        }
        if (!doc_.is_object()) doc_ = nlohmann::json::object();
        if (!doc_.contains("files")) doc_["files"] = nlohmann::json::object();
        if (!doc_.contains("runs")) doc_["runs"] = nlohmann::json::array();
        doc_["tool"] = "semiheat";
        doc_["version"] = kToolVersion;
    }

    static bool exists(const std::filesystem::path& dir) { return std::filesystem::exists(dir / "manifest.json"); }

    void set_config(const nlohmann::json& cfg) { doc_["config"] = cfg; }
    void set_graph_hash(const std::string& h) { doc_["graph_hash"] = h; }

    /// Writes an artifact atomically and records its checksum.
    void write(const std::string& name, const std::string& bytes, const std::string& command) {
        atomic_write(dir_ / name, bytes);
        doc_["files"][name] = {{"checksum", checksum_hex(bytes)}, {"bytes", bytes.size()}, {"command", command}};
    }

    void record_run(const std::string& command, double seconds, int exit_code) {
        doc_["runs"].push_back({{"command", command}, {"seconds", seconds}, {"exit", exit_code}});
    }

    std::vector<std::string> files() const {
        std::vector<std::string> out;
        for (auto it = doc_["files"].begin(); it != doc_["files"].end(); ++it) out.push_back(it.key());
        return out;
    }

    const nlohmann::json& doc() const { return doc_; }
    const std::filesystem::path& dir() const { return dir_; }

    void save() const { atomic_write(dir_ / "manifest.json", doc_.dump(2) + "\n"); }

private:
    std::filesystem::path dir_;
    nlohmann::json doc_;
};

// ---------------------------------------------------------------------------
// Binary field bundles
// ---------------------------------------------------------------------------

/// Named fields on one graph with a JSON header and a raw little-endian
/// double sidecar. The key (graph hash, seed, draw, eps, b, grid id)
/// identifies the content.
struct FieldBundle {
    std::string graph_hash;
    std::uint64_t seed = 0;
    std::uint64_t draw = 0;
    double eps = 0.0;
    int b = 0;
    std::string grid_id;
    int n = 0;
    std::vector<std::string> names;
    std::vector<Field> fields;

    std::string key() const {
        std::ostringstream o;
        o << graph_hash << ':' << seed << ':' << draw << ':' << format_double(eps) << ':' << b << ':' << grid_id;
        return o.str();
    }

    std::string binary() const {
        std::string bytes;
        bytes.reserve(fields.size() * static_cast<std::size_t>(n) * sizeof(double));
        for (const Field& f : fields)
            bytes.append(reinterpret_cast<const char*>(f.data()), static_cast<std::size_t>(f.size()) * sizeof(double));
        return bytes;
    }

    nlohmann::json header(const std::string& sidecar) const {
        return {{"key", key()}, {"graph_hash", graph_hash}, {"seed", seed}, {"draw", draw}, {"eps", eps},
                {"b", b}, {"grid_id", grid_id}, {"n", n}, {"names", names}, {"sidecar", sidecar},
                {"checksum", checksum_hex(binary())}, {"encoding", "float64-le"}};
    }
};

inline void write_bundle(Manifest& m, const std::string& stem, const FieldBundle& b, const std::string& command) {
    m.write(stem + ".bin", b.binary(), command);
    m.write(stem + ".json", b.header(stem + ".bin").dump(2) + "\n", command);
}

inline FieldBundle read_bundle(const std::filesystem::path& json_path) {
    nlohmann::json h = nlohmann::json::parse(read_file(json_path));
    FieldBundle b;
    b.graph_hash = h.at("graph_hash");
    b.seed = h.at("seed");
    b.draw = h.at("draw");
    b.eps = h.at("eps");
    b.b = h.at("b");
    b.grid_id = h.at("grid_id");
    b.n = h.at("n");
    b.names = h.at("names").get<std::vector<std::string>>();
    std::string bytes = read_file(json_path.parent_path() / h.at("sidecar").get<std::string>());
    require(checksum_hex(bytes) == h.at("checksum").get<std::string>(), "bundle: sidecar checksum mismatch");
    require(bytes.size() == b.names.size() * static_cast<std::size_t>(b.n) * sizeof(double), "bundle: sidecar size mismatch");
    for (std::size_t k = 0; k < b.names.size(); ++k) {
        Field f(b.n);
        std::memcpy(f.data(), bytes.data() + k * static_cast<std::size_t>(b.n) * sizeof(double),
                    static_cast<std::size_t>(b.n) * sizeof(double));
        b.fields.push_back(std::move(f));
    }
    return b;
}

// ---------------------------------------------------------------------------
// Trajectories and sweeps
// ---------------------------------------------------------------------------

inline std::string trajectory_csv(const SpaceTimeField& u) {
    CsvTable t("trajectory", 1, {"t", "vertex", "value"});
    for (std::size_t k = 0; k < u.size(); ++k)
        for (int x = 0; x < u.vertices(); ++x) t.row() << u.times[k] << x << u.values[k][x];
    return t.str();
}

inline nlohmann::json trajectory_diagnostics(const Trajectory& tr) {
    return {{"aborted", tr.aborted}, {"message", tr.message}, {"iterations", tr.iterations},
            {"lambda_used", tr.lambda_used}, {"grid", tr.u.times.id()}, {"nodes", tr.u.size()},
            {"step_residuals", tr.step_residuals}, {"step_contraction", tr.step_contraction},
            {"picard_distances", tr.picard_distances}, {"contraction_factors", tr.contraction_factors}};
}

inline std::string sweep_csv(const std::vector<EpsSweepRow>& rows) {
    CsvTable t("eps_sweep", 1, {"eps", "renormalized", "diff_norm", "final_sup", "aborted"});
    for (const auto& r : rows) t.row() << r.eps << r.renormalized << r.diff_norm << r.final_sup << r.aborted;
    return t.str();
}

inline std::string norm_reports_csv(const std::vector<NormReport>& reps) {
    CsvTable t("norm_report", 1, {"kind", "params", "value", "low_term", "sup_term", "argmax_t", "grid"});
    for (const auto& r : reps) {
        std::string params;
        for (const auto& [k, v] : r.params) params += (params.empty() ? "" : ";") + k + "=" + format_double(v);
        t.row() << r.kind << params << r.value << r.low_term << r.sup_term << r.argmax_t << r.grid_id;
    }
    return t.str();
}

}  // namespace semiheat
