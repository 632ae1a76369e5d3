#include <reentry/verify/report.hpp>

#include <cstdio>
#include <iomanip>

namespace reentry::verify
{
    using nlohmann::json;

    namespace
    {
        json model_json(smt::Model const &m)
        {
            json out = json::object();
            for (auto const &[name, value] : m)
                out[name] = evm::to_hex(value);
            return out;
        }

        json function_json(vm::FunctionInfo const &f)
        {
            return {{"id", f.entry.to_string()}, {"name", f.name}, {"has_call", f.has_call}, {"paths", f.paths}};
        }
    }

    json to_json(Verdict const &v)
    {
        json j;
        j["f"] = v.pair.f.entry.to_string();
        j["g"] = v.pair.g.entry.to_string();
        j["f_name"] = v.pair.f.name;
        j["g_name"] = v.pair.g.name;
        j["status"] = to_string(v.status);
        j["paths_I"] = v.paths_I;
        j["paths_C"] = v.paths_C;
        j["elapsed_ms"] = v.elapsed.count();
        j["stats"] = {{"f_n", v.stats.f_n}, {"f_p", v.stats.f_p}, {"g_n", v.stats.g_n}, {"g_p", v.stats.g_p}};
        if (v.witness)
            j["witness"] = {{"c_index", v.witness->c_index},
                            {"path_condition", v.witness->c.to_string()},
                            {"model", model_json(v.witness->model)}};
        else
            j["witness"] = nullptr;
        if (!v.reason.empty())
            j["reason"] = v.reason;
        if (!v.warnings.empty())
            j["warnings"] = v.warnings;
        return j;
    }

    json to_json(ContractReport const &c)
    {
        json j;
        j["label"] = c.label;
        j["digest"] = c.digest;
        j["code_size"] = c.code_size;
        j["status"] = to_string(c.status());
        j["functions"] = json::array();
        for (auto const &f : c.functions)
            j["functions"].push_back(function_json(f));
        j["pairs"] = json::array();
        for (auto const &v : c.verdicts)
            j["pairs"].push_back(to_json(v));
        if (!c.warnings.empty())
            j["warnings"] = c.warnings;
        if (!c.error.empty())
            j["error"] = c.error;
        return j;
    }

    json to_json(Report const &r)
    {
        json j;
        j["schema"] = kReportSchema;
        j["elapsed_ms"] = r.elapsed.count();
        j["exit_code"] = exit_code(r);
        j["contracts"] = json::array();
        for (auto const &c : r.contracts)
            j["contracts"].push_back(to_json(c));
        return j;
    }

    void print_summary(std::ostream &os, Report const &r)
    {
        char line[160];
        std::snprintf(line, sizeof line, "%-28s %6s %6s %10s %12s %9s %10s\n", "contract", "bytes", "pairs", "benign",
                      "vulnerable", "unknown", "time [s]");
        os << line;
        for (auto const &c : r.contracts)
        {
            std::size_t benign = 0, vulnerable = 0, unknown = 0;
            std::chrono::milliseconds time{0};
            for (auto const &v : c.verdicts)
            {
                time += v.elapsed;
                switch (v.status)
                {
                case Status::Benign: ++benign; break;
                case Status::Vulnerable: ++vulnerable; break;
                case Status::Inconclusive: ++unknown; break;
                }
            }
            auto label = c.label.size() > 28 ? c.label.substr(0, 25) + "..." : c.label;
            std::snprintf(line, sizeof line, "%-28s %6zu %6zu %10zu %12zu %9zu %10.3f\n", label.c_str(), c.code_size,
                          c.verdicts.size(), benign, vulnerable, unknown, time.count() / 1000.0);
            os << line;
            if (!c.error.empty())
                os << "  error: " << c.error << "\n";
        }
        os << "total " << std::fixed << std::setprecision(3) << r.elapsed.count() / 1000.0 << " s, exit "
           << exit_code(r) << "\n";
    }
}
