#include <reentry/cli/cli.hpp>
#include <reentry/cfg/manager.hpp>
#include <reentry/ingest/ingest.hpp>
#include <reentry/verify/report.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace reentry::cli
{
    namespace fs = std::filesystem;

    namespace
    {
        struct Config
        {
            std::vector<std::string> bytecode;
            std::vector<std::string> addresses;
            std::string rpc_url;
            unsigned workers = 1;
            unsigned depth = 8;
            unsigned loop_bound = 3;
            std::size_t path_cap = 10000;
            double solver_timeout = 60;
            std::string cfg_out;
            std::string report = "reentry-report.json";
            bool verbose = false;
        };

        std::string file_safe(std::string s)
        {
            for (auto &c : s)
                if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.')
                    c = '_';
            return s;
        }

        void write_file(fs::path const &path, std::string const &text)
        {
            std::ofstream out(path);
            out << text;
            if (!out)
                throw ingest::IoError("cannot write " + path.string());
        }

        void write_dots(fs::path const &dir, verify::Report const &report)
        {
            fs::create_directories(dir);
            for (auto const &c : report.contracts)
            {
                auto stem = file_safe(c.label);
                if (c.ecfg)
                    write_file(dir / (stem + ".extract.dot"), cfg::export_dot(*c.ecfg, c.label));
                for (auto const &v : c.verdicts)
                {
                    auto pair = stem + "." + file_safe(v.pair.f.entry.to_string()) + "-" +
                                file_safe(v.pair.g.entry.to_string());
                    if (v.ecfg_I)
                        write_file(dir / (pair + ".I.dot"), cfg::export_dot(*v.ecfg_I, pair + " I"));
                    if (v.ecfg_C)
                        write_file(dir / (pair + ".C.dot"), cfg::export_dot(*v.ecfg_C, pair + " C"));
                }
            }
        }

        int analyze(Config const &cfg, std::ostream &out, std::ostream &err)
        {
            std::vector<verify::Target> targets;
            std::vector<verify::ContractReport> failed;
            auto fail = [&](std::string label, std::string what) {
                verify::ContractReport cr;
                cr.label = std::move(label);
                cr.error = std::move(what);
                err << "error: " << cr.label << ": " << cr.error << "\n";
                failed.push_back(std::move(cr));
            };

            for (auto const &path : cfg.bytecode)
            {
                auto label = fs::path(path).stem().string();
                try
                {
                    auto loaded = ingest::load_hex(path);
                    for (auto const &w : loaded.warnings)
                        err << "warning: " << w << "\n";
                    targets.push_back({label, evm::make_program(std::move(loaded.code))});
                }
                catch (ingest::IngestError const &e)
                {
                    fail(label, e.what());
                }
            }
            for (auto const &addr : cfg.addresses)
            {
                try
                {
                    auto fetched = ingest::fetch_code(addr, cfg.rpc_url);
                    targets.push_back({ingest::normalize_address(addr), evm::make_program(std::move(fetched.code))});
                }
                catch (ingest::IngestError const &e)
                {
                    fail(addr, e.what());
                }
            }

            verify::Options opts;
            opts.workers = cfg.workers;
            opts.limits.call_depth = cfg.depth;
            opts.limits.loop_bound = cfg.loop_bound;
            opts.limits.path_cap = cfg.path_cap;
            opts.solver_timeout = std::chrono::milliseconds(static_cast<long long>(cfg.solver_timeout * 1000));
            opts.keep_ecfg = !cfg.cfg_out.empty();

            auto report = verify::analyze(targets, opts);
            for (auto &f : failed)
                report.contracts.push_back(std::move(f));

            if (cfg.verbose)
                for (auto const &c : report.contracts)
                {
                    for (auto const &w : c.warnings)
                        err << "warning: " << c.label << ": " << w << "\n";
                    for (auto const &v : c.verdicts)
                    {
                        err << c.label << " " << v.pair.f.name << " x " << v.pair.g.name << ": "
                            << verify::to_string(v.status) << " (I=" << v.paths_I << ", C=" << v.paths_C << ", "
                            << v.elapsed.count() << " ms)";
                        if (!v.reason.empty())
                            err << " " << v.reason;
                        err << "\n";
                    }
                }

            auto json = verify::to_json(report).dump(2) + "\n";
            if (cfg.report == "-")
                out << json;
            else
                write_file(cfg.report, json);
            if (!cfg.cfg_out.empty())
                write_dots(cfg.cfg_out, report);

            // keep stdout clean for the JSON when it goes there
            verify::print_summary(cfg.report == "-" ? err : out, report);
            return verify::exit_code(report);
        }
    }

    int run(int argc, char const *const *argv, std::ostream &out, std::ostream &err)
    {
        CLI::App app{"Static detection of re-entrancy in EVM runtime bytecode", "reentry"};
        app.require_subcommand(1);
        Config cfg;
        if (auto url = ingest::default_rpc_url())
            cfg.rpc_url = *url;

        auto *an = app.add_subcommand("analyze", "Analyze contracts for re-entrancy");
        an->add_option("--bytecode", cfg.bytecode, "Runtime bytecode hex files")->check(CLI::ExistingFile);
        an->add_option("--address", cfg.addresses, "Deployed contract addresses to fetch");
        an->add_option("--rpc-url", cfg.rpc_url, "JSON-RPC node URL (default: $ETH_RPC_URL)");
        an->add_option("--workers", cfg.workers, "Parallel pair workers")->check(CLI::PositiveNumber);
        an->add_option("--depth", cfg.depth, "Call depth bound")->check(CLI::PositiveNumber);
        an->add_option("--loop-bound", cfg.loop_bound, "Visits per jump target beyond the first")
            ->check(CLI::PositiveNumber);
        an->add_option("--path-cap", cfg.path_cap, "End states per scenario before giving up")
            ->check(CLI::PositiveNumber);
        an->add_option("--solver-timeout", cfg.solver_timeout, "Per-query timeout in seconds")
            ->check(CLI::PositiveNumber);
        an->add_option("--cfg-out", cfg.cfg_out, "Directory for DOT renderings of the explored graphs");
        an->add_option("--report", cfg.report, "JSON report path, '-' for stdout");
        an->add_flag("--verbose,-v", cfg.verbose, "Per-pair progress and warnings");

        try
        {
            app.parse(argc, argv);
        }
        catch (CLI::CallForHelp const &e)
        {
            return app.exit(e, out, err);
        }
        catch (CLI::CallForAllHelp const &e)
        {
            return app.exit(e, out, err);
        }
        catch (CLI::ParseError const &e)
        {
            app.exit(e, out, err);
            return kUsageError;
        }
        if (cfg.bytecode.empty() && cfg.addresses.empty())
        {
            err << "analyze: no targets (use --bytecode or --address)\n" << an->help();
            return kUsageError;
        }
        if (!cfg.addresses.empty() && cfg.rpc_url.empty())
        {
            err << "analyze: --address needs --rpc-url or ETH_RPC_URL\n" << an->help();
            return kUsageError;
        }

        try
        {
            return analyze(cfg, out, err);
        }
        catch (std::exception const &e)
        {
            err << "error: " << e.what() << "\n";
            return 2;
        }
    }
}
