// Command-line front end: statistic on a data file, bound tables,
// simulations, table reproduction and sample generation.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sphericity/sphericity.hpp"

namespace {

using namespace sphericity;
using json = nlohmann::ordered_json;

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr std::uint64_t kDefaultSeed = 20240101;

// --config accepts flat `key = value` text or a JSON object.
class FlatOrJsonConfig : public CLI::ConfigBase {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::stringstream buffer;
        buffer << input.rdbuf();
        const std::string text = buffer.str();
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || text[first] != '{') {
            std::istringstream again(text);
            return CLI::ConfigBase::from_config(again);
        }
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw CLI::ConversionError("config: " + std::string(e.what()));
        }
        if (!doc.is_object()) throw CLI::ConversionError("config: JSON config must be an object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : doc.items()) {
            CLI::ConfigItem item;
            item.name = key;
            auto text_of = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
            if (value.is_array())
                for (const auto& v : value) item.inputs.push_back(text_of(v));
            else
                item.inputs.push_back(text_of(value));
            items.push_back(std::move(item));
        }
        return items;
    }
};

// One output cell. `digits` is the decimal places used by --pretty (-1: as is).
struct Cell {
    std::variant<std::monostate, double, long long, std::uint64_t, std::string> value;
    int digits = -1;
};

Cell num(double x, int digits = -1) {
    if (!std::isfinite(x)) return {};
    return {x, digits};
}
Cell integer(long long x) { return {x, -1}; }
Cell seed_cell(std::uint64_t s) { return {s, -1}; }

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string csv_cell(const Cell& c, bool pretty) {
    return std::visit(
        [&](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "";
            } else if constexpr (std::is_same_v<T, double>) {
                if (pretty && c.digits >= 0) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%.*f", c.digits, v);
                    return buf;
                }
                return io::format_double(v);
            } else if constexpr (std::is_same_v<T, long long> || std::is_same_v<T, std::uint64_t>) {
                return std::to_string(v);
            } else {
                return v;
            }
        },
        c.value);
}

json json_cell(const Cell& c) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>)
                return nullptr;
            else
                return v;
        },
        c.value);
}

void emit(const Table& t, const std::string& format, bool pretty, std::ostream& out) {
    if (format == "json") {
        json arr = json::array();
        for (const auto& row : t.rows) {
            json obj = json::object();
            for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i]] = json_cell(row[i]);
            arr.push_back(std::move(obj));
        }
        out << arr.dump(pretty ? 2 : -1) << '\n';
        return;
    }
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i], pretty);
        out << '\n';
    }
}

struct Options {
    std::optional<int> n, n1, N1, N2;
    int p1 = 0, p2 = 0;
    bool have_p1 = false, have_p2 = false;
    std::vector<double> alphas{0.10, 0.05, 0.01};
    long long reps = 1'000'000;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    int order = 2;
    double grid_step = 0.05;
    std::string format = "csv";
    std::string out;
    bool pretty = false;
    std::string sampler = "summary";
    std::string input;
    std::string data;
    double sigma2 = 1.0;
    std::string table;
};

std::uint64_t resolve_seed(const Options& o) {
    if (o.seed) return *o.seed;
    if (const char* env = std::getenv("SPHERICITY_SEED")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw CLI::ValidationError("SPHERICITY_SEED", "not an unsigned integer: '" + std::string(env) + "'");
    }
    return kDefaultSeed;
}

unsigned resolve_threads(const Options& o) {
    if (o.threads > 0) return o.threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

MonotoneDesign design_from(std::optional<int> n, std::optional<int> n1, std::optional<int> N1,
                           std::optional<int> N2, std::optional<int> p1, std::optional<int> p2) {
    if (!p1) throw InvalidDesign("design: --p1 is required");
    const int q2 = p2.value_or(0);
    if (N1 || N2) {
        if (n || n1) throw InvalidDesign("design: give either --n/--n1 or --N1/--N2, not both");
        if (!N1) throw InvalidDesign("design: --N1 is required with --N2");
        return {*N1, N2.value_or(0), *p1, q2};
    }
    if (!n1) throw InvalidDesign("design: give --n and --n1 (or --N1 and --N2)");
    return MonotoneDesign::from_n(n.value_or(*n1), *n1, *p1, q2);
}

MonotoneDesign design_from(const Options& o) {
    return design_from(o.n, o.n1, o.N1, o.N2, o.have_p1 ? std::optional<int>(o.p1) : std::nullopt,
                       o.have_p2 ? std::optional<int>(o.p2) : std::nullopt);
}

// Designs (and optional alpha) listed in a previously emitted CSV.
struct ReplayRow {
    MonotoneDesign design;
    std::optional<double> alpha;
};

std::vector<ReplayRow> replay_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'", 0);
    const auto t = io::read_table_csv(in);
    auto col = [&](const char* name) { return t.column(name); };
    if (col("p1") < 0) throw ParseError("replay input needs a p1 column", 1);
    std::vector<ReplayRow> rows;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& cells = t.rows[r];
        auto get_int = [&](const char* name) -> std::optional<int> {
            const int c = col(name);
            if (c < 0 || cells[c].empty()) return std::nullopt;
            try {
                std::size_t used = 0;
                const int v = std::stoi(cells[c], &used);
                if (used == cells[c].size()) return v;
            } catch (const std::exception&) {
            }
            throw ParseError("column " + std::string(name) + " is not an integer: '" + cells[c] + "'", r + 2, c + 1);
        };
        std::optional<double> alpha;
        if (const int c = col("alpha"); c >= 0 && !cells[c].empty()) {
            try {
                alpha = std::stod(cells[c]);
            } catch (const std::exception&) {
                throw ParseError("alpha is not a number: '" + cells[c] + "'", r + 2, c + 1);
            }
        }
        std::optional<int> n, n1, N1, N2;
        if (col("N1") >= 0) {
            N1 = get_int("N1");
            N2 = get_int("N2");
        } else {
            n = get_int("n");
            n1 = get_int("n1");
        }
        rows.push_back({design_from(n, n1, N1, N2, get_int("p1"), get_int("p2")), alpha});
    }
    return rows;
}

// ---- bounds ---------------------------------------------------------------

const std::vector<std::string> kBoundColumns{"p1",     "p2", "n",  "n1",  "BOUND1", "v1", "cv1",
                                             "BOUND2", "v2", "c2", "cv2", "BOUND3", "v3", "c3",
                                             "cv3",    "BOUND4", "v4", "c4",  "cv4",    "kappa2", "m"};

std::vector<Cell> bound_cells(const MonotoneDesign& d, const BoundReport& r) {
    std::vector<Cell> row{integer(d.p1()), integer(d.p2()), integer(d.n()), integer(d.n1())};
    row.push_back(num(r.bound1.value, 4));
    row.push_back(num(r.bound1.v, 2));
    row.push_back(num(r.bound1.c_v, 2));
    for (const auto* e : {&r.bound2, &r.bound3, &r.bound4}) {
        if (e->feasible) {
            row.push_back(num(e->value, 4));
            row.push_back(num(e->v, 2));
            row.push_back(num(e->c, 2));
            row.push_back(num(e->c_v, 2));
        } else {
            row.insert(row.end(), 4, Cell{});
        }
    }
    row.push_back(num(r.kappa2, 3));
    row.push_back(num(r.m, 2));
    return row;
}

Table run_bounds(const std::vector<MonotoneDesign>& designs, const Options& o) {
    Table t{kBoundColumns, {}};
    for (const auto& d : designs)
        t.rows.push_back(bound_cells(d, minimize_bounds(d, o.order, o.grid_step, resolve_threads(o))));
    return t;
}

// ---- simulate -------------------------------------------------------------

const std::vector<std::string> kSimColumns{"N1",     "N2",    "p1",     "p2",     "n",      "n1",
                                           "alpha",  "reps",  "seed",   "alpha1", "alpha1_se", "A_prop",
                                           "A_SYS",  "B_prop", "B_SYS", "MAE",    "mean_T", "var_T",
                                           "kappa2", "m"};

// Plan problems (too few reps, bad alpha) are usage errors, not numerical ones.
ExperimentPlan make_plan(const MonotoneDesign& d, std::vector<double> alphas, const Options& o) {
    ExperimentPlan plan{d};
    plan.reps = static_cast<std::size_t>(o.reps);
    plan.seed = resolve_seed(o);
    plan.sampler = parse_sampler(o.sampler);
    plan.alphas = std::move(alphas);
    plan.order = o.order;
    plan.threads = resolve_threads(o);
    try {
        plan.validate();
    } catch (const DomainError& e) {
        throw CLI::ValidationError("--reps/--alpha", e.what());
    }
    return plan;
}

void append_simulation(Table& t, const MonotoneDesign& d, const std::vector<double>& alphas, const Options& o) {
    const auto res = run_experiment(make_plan(d, alphas, o));
    for (const auto& a : res.per_alpha) {
        t.rows.push_back({integer(d.N1()), integer(d.N2()), integer(d.p1()), integer(d.p2()), integer(d.n()),
                          integer(d.n1()), num(a.alpha, 2), integer(static_cast<long long>(res.rep_count)),
                          seed_cell(res.seed), num(a.alpha1, 3), num(a.alpha1_se, 4), num(a.a_prop, 3),
                          num(a.a_sys, 3), num(a.b_prop, 3), num(a.b_sys, 3), num(res.mae, 4), num(res.mean_T, 4),
                          num(res.var_T, 4), num(res.kappa2, 3), num(res.m, 2)});
    }
}

// ---- reproduce ------------------------------------------------------------

const std::vector<std::string> kTypeOneColumns{"N1", "N2",     "p1",    "p2",   "alpha", "alpha1", "alpha1_se",
                                               "A_prop", "A_SYS", "B_prop", "B_SYS", "reps", "seed"};

Table reproduce(int id, const Options& o) {
    if (tables::is_bound_table(id)) {
        Table t{kBoundColumns, {}};
        const bool with_mae = id == 1 && o.reps > 0;
        if (with_mae) t.columns.insert(t.columns.end(), {"MAE", "reps", "seed"});
        for (const auto& row : tables::bound_table(id)) {
            const auto d = row.design();
            auto cells = bound_cells(d, minimize_bounds(d, o.order, o.grid_step, resolve_threads(o)));
            if (with_mae) {
                const auto res = run_experiment(make_plan(d, {}, o));
                cells.push_back(num(res.mae, 4));
                cells.push_back(integer(static_cast<long long>(res.rep_count)));
                cells.push_back(seed_cell(res.seed));
            }
            t.rows.push_back(std::move(cells));
        }
        return t;
    }
    if (!tables::is_type_one_table(id)) throw CLI::ValidationError("reproduce", "unknown table id " + std::to_string(id));

    Table t{kTypeOneColumns, {}};
    for (const auto& row : tables::type_one_table(id)) {
        const auto d = row.design();
        const double ap = a_prop(d, row.alpha, o.order);
        const double as = a_sys(d, row.alpha);
        std::vector<Cell> cells{integer(row.N1), integer(row.N2), integer(row.p1), integer(row.p2), num(row.alpha, 2)};
        if (o.reps > 0) {
            const auto res = run_experiment(make_plan(d, {row.alpha}, o));
            const auto& a = res.per_alpha.front();
            cells.insert(cells.end(), {num(a.alpha1, 3), num(a.alpha1_se, 4), num(ap, 3), num(as, 3),
                                       num(a.alpha1 - ap, 3), num(a.alpha1 - as, 3),
                                       integer(static_cast<long long>(res.rep_count)), seed_cell(res.seed)});
        } else {
            cells.insert(cells.end(), {Cell{}, Cell{}, num(ap, 3), num(as, 3), Cell{}, Cell{}, integer(0), Cell{}});
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

int parse_table_id(const std::string& name) {
    std::string digits = name;
    if (digits.rfind("table", 0) == 0) digits = digits.substr(5);
    try {
        std::size_t used = 0;
        const int id = std::stoi(digits, &used);
        if (used == digits.size()) return id;
    } catch (const std::exception&) {
    }
    throw CLI::ValidationError("reproduce", "unknown table id '" + name + "' (expected table1 .. table9)");
}

// ---- stat -----------------------------------------------------------------

Table run_stat(const Options& o) {
    io::SampleLayout layout;
    if (o.N1) layout.N1 = *o.N1;
    if (o.have_p1) layout.p1 = o.p1;
    const auto sample = io::read_sample_csv(o.data, layout);
    if (o.have_p2 && o.p2 != sample.p2())
        throw ParseError("--p2 " + std::to_string(o.p2) + " does not match the file (p2 = " +
                             std::to_string(sample.p2()) + ")",
                         1);
    const auto d = sample.design();
    const auto lr = lr_lambda(compute_w(sample, d), d);
    const auto cs = cumulant_set(d, std::max(kDefaultCumulantOrder, o.order + 2));
    const EdgeworthExpansion ex(cs, o.order);
    const double T = standardize(lr.scaled, cs);

    Table t{{"N1", "N2", "p1", "p2", "lambda", "log_lambda", "minus2_log_lambda", "scaled", "T", "kappa1", "kappa2",
             "m", "f", "p_value_edgeworth", "p_value_chi2_expansion", "p_value_chi2"},
            {}};
    t.rows.push_back({integer(d.N1()), integer(d.N2()), integer(d.p1()), integer(d.p2()), num(std::exp(lr.log_lambda)),
                      num(lr.log_lambda), num(lr.statistic), num(lr.scaled), num(T), num(cs.kappa1()),
                      num(cs.kappa2()), num(cs.m), integer(d.chi2_dof()), num(1.0 - ex.cdf(T), 4),
                      num(1.0 - cdf_expansion(lr.statistic, d), 4), num(specfun::chi2_sf(lr.statistic, d.chi2_dof()), 4)});
    return t;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sphericity test for two-step monotone incomplete data: statistic, Edgeworth error bounds, "
                 "Monte Carlo checks"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<FlatOrJsonConfig>());
    app.set_config("--config", "", "Read options from a `key = value` or JSON file; flags override it");

    Options o;
    std::optional<int> p1_flag, p2_flag;
    app.add_option("--n", o.n, "n = N - 1");
    app.add_option("--n1", o.n1, "n1 = N1 - 1");
    app.add_option("--N1", o.N1, "Complete observations");
    app.add_option("--N2", o.N2, "Observations of the first p1 coordinates only");
    app.add_option("--p1", p1_flag, "Coordinates observed in every row");
    app.add_option("--p2", p2_flag, "Coordinates observed only in the first N1 rows");
    app.add_option("--alpha", o.alphas, "Significance level(s)")->check(CLI::Range(0.0, 1.0))->delimiter(',');
    app.add_option("--reps", o.reps, "Monte Carlo replications (0 skips simulation in reproduce)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--seed", o.seed, "Master seed (falls back to SPHERICITY_SEED)");
    app.add_option("--threads", o.threads, "Worker threads (0: hardware concurrency)");
    app.add_option("--order", o.order, "Edgeworth expansion order s")->check(CLI::Range(1, 8));
    app.add_option("--grid-step", o.grid_step, "Grid spacing for v and c");
    app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out", o.out, "Write output here instead of stdout");
    app.add_flag("--pretty", o.pretty, "Round CSV to table precision; indent JSON");
    app.add_option("--sampler", o.sampler, "Null sampler")->check(CLI::IsMember({"summary", "raw"}));
    app.add_option("--input", o.input, "Replay the designs listed in a CSV emitted by this tool");

    auto* stat = app.add_subcommand("stat", "Likelihood ratio statistic and p-values for a data file")->fallthrough();
    stat->add_option("--data", o.data, "Sample CSV (header x1..xp; partial rows leave the last p2 cells empty)")
        ->required();
    auto* bounds = app.add_subcommand("bounds", "Error bounds BOUND1-4 with their minimizing grid points")->fallthrough();
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo MAE and Type I error rates")->fallthrough();
    auto* repro = app.add_subcommand("reproduce", "Recompute a published table (table1 .. table9)")->fallthrough();
    repro->add_option("table", o.table, "Table id")->required();
    auto* sample = app.add_subcommand("sample", "Draw a null sample and write it as CSV")->fallthrough();
    sample->add_option("--sigma2", o.sigma2, "Common variance")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }
    if (p1_flag) o.p1 = *p1_flag, o.have_p1 = true;
    if (p2_flag) o.p2 = *p2_flag, o.have_p2 = true;

    try {
        std::ofstream file;
        if (!o.out.empty()) {
            file.open(o.out);
            if (!file) throw ParseError("cannot write '" + o.out + "'", 0);
        }
        std::ostream& out = o.out.empty() ? std::cout : file;

        if (stat->parsed()) {
            emit(run_stat(o), o.format, o.pretty, out);
        } else if (bounds->parsed()) {
            std::vector<MonotoneDesign> designs;
            if (!o.input.empty())
                for (const auto& r : replay_rows(o.input)) designs.push_back(r.design);
            else
                designs.push_back(design_from(o));
            emit(run_bounds(designs, o), o.format, o.pretty, out);
        } else if (simulate->parsed()) {
            Table t{kSimColumns, {}};
            if (!o.input.empty()) {
                for (const auto& r : replay_rows(o.input))
                    append_simulation(t, r.design, r.alpha ? std::vector<double>{*r.alpha} : o.alphas, o);
            } else {
                append_simulation(t, design_from(o), o.alphas, o);
            }
            emit(t, o.format, o.pretty, out);
        } else if (repro->parsed()) {
            emit(reproduce(parse_table_id(o.table), o), o.format, o.pretty, out);
        } else if (sample->parsed()) {
            const auto d = design_from(o);
            auto engine = make_engine(resolve_seed(o), 0);
            io::write_sample_csv(out, sample_raw(d, o.sigma2, engine));
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidDesign& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
