#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hopflab/errors.hpp"
#include "hopflab/format.hpp"
#include "hopflab/grid_lab.hpp"
#include "hopflab/hopf_fields.hpp"

using namespace hopflab;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_out(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out);
    if (!f) throw InputError("cannot write " + out);
    f << text;
}

void emit(json j, const std::string& out) {
    round_floats(j);
    write_out(j.dump() + "\n", out);
}

std::vector<long> parse_list(const std::string& s) {
    std::vector<long> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            long x = std::stol(tok, &used);
            if (used != tok.size()) throw InputError("bad integer list: " + s);
            v.push_back(x);
        } catch (const std::logic_error&) {
            throw InputError("bad integer list: " + s);
        }
    }
    if (v.empty()) throw InputError("empty integer list");
    return v;
}

std::vector<double> parse_reals(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw InputError("bad number list: " + s);
        } catch (const std::logic_error&) {
            throw InputError("bad number list: " + s);
        }
    }
    return v;
}

SphereField field_by_name(const std::string& name) {
    if (name == "hopfmap") return hopf_map_field();
    if (name == "stadium") return stadium_field();
    if (name == "linked-stadia") return linked_stadia_field();
    if (name.rfind("spaghetton:", 0) == 0) {
        auto k = parse_list(name.substr(11));
        if (k.size() != 1) throw InputError("spaghetton takes one k");
        return spaghetton_field(static_cast<int>(k[0]));
    }
    if (name.rfind("gadget:", 0) == 0) {
        auto v = parse_reals(name.substr(7));
        if (v.size() != 2) throw InputError("gadget takes r,rho");
        return gadget_field(v[1], v[0], GadgetVariant::boundary4d);
    }
    throw InputError("unknown field " + name);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hopflab: branched transport bounds and Hopf invariant experiments"};
    app.require_subcommand(1);

    std::string out;
    int threads = 0;
    app.add_option("--out", out, "write the result here instead of stdout");
    app.add_option("--threads", threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);

    // linking
    auto* c_link = app.add_subcommand("linking", "linking number of two curves or of the spaghetton sheaves");
    std::vector<std::string> curve_files;
    int link_k = 0;
    c_link->add_option("curves", curve_files, "two curve JSON files")->expected(0, 2);
    c_link->add_option("--spaghetton", link_k, "sheaf parameter k");

    // hopf
    auto* c_hopf = app.add_subcommand("hopf", "Hopf invariant of a field");
    std::string field_name = "hopfmap", method = "preimage";
    int res = 128;
    c_hopf->add_option("--field", field_name, "hopfmap|stadium|linked-stadia|spaghetton:k|gadget:r,rho");
    c_hopf->add_option("--method", method)->check(CLI::IsMember({"preimage", "whitehead"}));
    c_hopf->add_option("--res", res, "grid resolution");

    // spaghetton
    auto* c_spag = app.add_subcommand("spaghetton", "sheaf curves, linking and energy of the spaghetton");
    int spag_k = 1, spag_res = 0;
    c_spag->add_option("--k", spag_k)->required();
    c_spag->add_option("--res", spag_res, "energy grid resolution; 0 skips the energy");
    bool spag_curves = false;
    c_spag->add_flag("--curves", spag_curves, "include the curve vertices");

    // solve
    auto* c_solve = app.add_subcommand("solve", "branched connection of points to the box boundary");
    std::string grid, points_file, model_spec;
    double alpha = 0.5;
    std::uint64_t seed = 0;
    int solve_res = 9;
    c_solve->add_option("--grid", grid, "m,k uniform grid in the unit box");
    c_solve->add_option("--points", points_file, "JSON {dim, points, box?}");
    c_solve->add_option("--alpha", alpha);
    c_solve->add_option("--model", model_spec, "alpha:A | nu3 | nu2:Cnu=C");
    c_solve->add_option("--seed", seed);
    c_solve->add_option("--res", solve_res, "lattice nodes per axis for the exact oracle");
    bool with_oracle = false;
    c_solve->add_flag("--oracle", with_oracle, "also run the exact lattice oracle");

    // grid-scaling
    auto* c_scal = app.add_subcommand("grid-scaling", "upper and lower bounds on uniform grids");
    int scal_m = 2;
    std::string scal_ks = "2,4,8,16,32";
    double scal_alpha = 0.5;
    std::uint64_t scal_seed = 0;
    c_scal->add_option("--m", scal_m);
    c_scal->add_option("--ks", scal_ks, "comma separated increasing k");
    c_scal->add_option("--alpha", scal_alpha);
    c_scal->add_option("--seed", scal_seed);

    // singularities
    auto* c_sing = app.add_subcommand("singularities", "four dimensional singularity lattice bounds");
    std::string sing_ks = "1,2,3,4";
    c_sing->add_option("--ks", sing_ks);

    // budget
    auto* c_budget = app.add_subcommand("budget", "partial sums of the divergent budget series");
    long budget_n = 1000;
    c_budget->add_option("--N", budget_n)->check(CLI::Range(2L, 100000000L));

    // validate-graph
    auto* c_val = app.add_subcommand("validate-graph", "check the balance law of a graph JSON");
    std::string graph_file;
    c_val->add_option("graph", graph_file)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    json config;
    config["threads"] = threads;
    if (!out.empty()) config["out"] = out;

    try {
        set_thread_count(threads);
        auto t0 = std::chrono::steady_clock::now();

        if (*c_link) {
            config["subcommand"] = "linking";
            json j;
            if (link_k > 0) {
                if (!curve_files.empty()) throw InputError("give curve files or --spaghetton, not both");
                config["spaghetton"] = link_k;
                SheafPair sp = build_sheaves(link_k);
                j["config"] = config;
                j["total_linking"] = total_linking(sp);
            } else {
                if (curve_files.size() != 2) throw InputError("linking needs two curve files or --spaghetton k");
                config["curves"] = curve_files;
                Polyline3 a = curve_from_json(read_json(curve_files[0]));
                Polyline3 b = curve_from_json(read_json(curve_files[1]));
                j["config"] = config;
                j["gauss"] = gauss_linking(a, b);
                j["crossing"] = crossing_linking(a, b);
            }
            emit(j, out);
        } else if (*c_hopf) {
            config["subcommand"] = "hopf";
            config["field"] = field_name;
            config["method"] = method;
            config["res"] = res;
            SphereField f = field_by_name(field_name);
            json j;
            j["config"] = config;
            j["field"] = field_name;
            j["method"] = method;
            if (method == "preimage") {
                HopfResult h = hopf_preimage(f, res);
                j["value"] = h.value;
                j["raw"] = h.raw;
                j["pair_index"] = h.pair_index;
            } else {
                if (static_cast<double>(res) * res * res > 4e7) throw ResourceError("whitehead grid too large");
                Vec3 lo = f.box_lo;
                double side = 0;
                for (int d = 0; d < 3; ++d) side = std::max(side, f.box_hi[d] - f.box_lo[d]);
                if (f.name == "hopfmap") {
                    lo = {-20, -20, -20};
                    side = 40;
                } else {
                    side *= 1.15;
                    for (int d = 0; d < 3; ++d) lo[d] = 0.5 * (f.box_lo[d] + f.box_hi[d]) - side / 2;
                }
                j["value"] = hopf_whitehead(sample_field(f, res, lo, side));
            }
            j["runtime"] = seconds_since(t0);
            emit(j, out);
        } else if (*c_spag) {
            config["subcommand"] = "spaghetton";
            config["k"] = spag_k;
            config["res"] = spag_res;
            SheafPair sp = build_sheaves(spag_k);
            json j;
            j["config"] = config;
            j["curves"] = sp.horizontal.size() + sp.perpendicular.size();
            j["total_linking"] = total_linking(sp);
            j["intra_min_distance"] = sp.intra_min_distance;
            j["inter_min_distance"] = sp.inter_min_distance;
            if (spag_res > 0) {
                EnergyResult e = energy_p(spaghetton_field(spag_k), 3, spag_res);
                j["energy3"] = e.value;
                j["sup_gradient"] = e.sup_gradient;
            }
            if (spag_curves) {
                for (const auto& c : sp.horizontal) j["horizontal"].push_back(curve_to_json(c));
                for (const auto& c : sp.perpendicular) j["perpendicular"].push_back(curve_to_json(c));
            }
            emit(j, out);
        } else if (*c_solve) {
            config["subcommand"] = "solve";
            CostModel model = model_spec.empty() ? CostModel::power_law(alpha) : CostModel::parse(model_spec);
            config["model"] = model.spec();
            config["seed"] = seed;
            std::vector<Point> pts;
            BoxDomain box;
            if (!grid.empty() == !points_file.empty()) throw InputError("solve needs exactly one of --grid, --points");
            if (!grid.empty()) {
                auto mk = parse_list(grid);
                if (mk.size() != 2) throw InputError("--grid takes m,k");
                if (mk[0] < 1 || mk[0] > kMaxDim || mk[1] < 1) throw InputError("--grid needs 1 <= m <= 4, k >= 1");
                if (std::pow(static_cast<double>(mk[1]), static_cast<double>(mk[0])) > kMaxGridPoints)
                    throw ResourceError("grid exceeds the point budget");
                config["grid"] = grid;
                UniformGridSpec spec{static_cast<int>(mk[0]), static_cast<int>(mk[1]), 1.0, {}};
                pts = grid_points(spec);
                box = BoxDomain::unit(spec.dim);
            } else {
                config["points"] = points_file;
                json pj = read_json(points_file);
                try {
                    int dim = pj.at("dim").get<int>();
                    if (dim < 1 || dim > kMaxDim) throw InputError("dim must be in 1..4");
                    for (const auto& p : pj.at("points")) pts.push_back(point_from_json(p, dim));
                    box = pj.contains("box") ? pj.at("box").get<BoxDomain>() : BoxDomain::unit(dim);
                } catch (const json::exception& e) {
                    throw InputError(std::string("bad points json: ") + e.what());
                }
                if (static_cast<double>(pts.size()) > kMaxGridPoints) throw ResourceError("too many points");
            }
            SolveOptions opt;
            opt.seed = seed;
            opt.resolution = solve_res;
            Solution s = solve_brbd(pts, box, model, opt);
            json j;
            j["config"] = config;
            j["solution"] = solution_to_json(s, model);
            if (with_oracle) {
                config["res"] = solve_res;
                j["config"] = config;
                j["oracle"] = oracle_exact(pts, box, model, opt);
            }
            emit(j, out);
        } else if (*c_scal) {
            config["subcommand"] = "grid-scaling";
            config["m"] = scal_m;
            config["alpha"] = scal_alpha;
            config["ks"] = scal_ks;
            config["seed"] = scal_seed;
            SolveOptions opt;
            opt.seed = scal_seed;
            ScalingReport r = run_scaling(scal_m, scal_alpha, parse_list(scal_ks), opt);
            write_out("# " + config.dump() + "\n" + report_csv(r), out);
        } else if (*c_sing) {
            config["subcommand"] = "singularities";
            config["ks"] = sing_ks;
            std::ostringstream csv;
            csv << "# " << config.dump() << "\n";
            csv << "k,points,lower,flux_lower,upper,ratio,certified_ratio\n";
            for (long k : parse_list(sing_ks)) {
                SingularityReport s = singularity_grid(k);
                csv << k << ',' << s.points.size() << ',' << fmt_sig(s.lower) << ',' << fmt_sig(s.flux_lower) << ','
                    << fmt_sig(s.upper) << ',' << fmt_sig(s.ratio) << ',' << fmt_sig(s.certified_ratio) << "\n";
            }
            write_out(csv.str(), out);
        } else if (*c_budget) {
            config["subcommand"] = "budget";
            config["N"] = budget_n;
            std::vector<long> cuts;
            for (long n = 10; n < budget_n; n *= 10) cuts.push_back(n);
            cuts.push_back(budget_n);
            std::ostringstream csv;
            csv << "# " << config.dump() << "\n";
            csv << "N,c,S1,S2,S3,S2_tail,S3_floor\n";
            for (const auto& b : budget_series_at(cuts))
                csv << b.N << ',' << fmt_sig(b.c) << ',' << fmt_sig(b.S1) << ',' << fmt_sig(b.S2) << ','
                    << fmt_sig(b.S3) << ',' << fmt_sig(b.S2_tail) << ',' << fmt_sig(b.S3_floor) << "\n";
            write_out(csv.str(), out);
        } else if (*c_val) {
            config["subcommand"] = "validate-graph";
            config["graph"] = graph_file;
            TransportGraph g = graph_from_json(read_json(graph_file));
            ValidationReport v = validate(g);
            json j;
            j["config"] = config;
            j["ok"] = v.ok();
            j["messages"] = v.messages;
            j["boundary_flux"] = boundary_flux(g);
            emit(j, out);
            if (!v.ok()) return 1;
        }
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const ResourceError& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
