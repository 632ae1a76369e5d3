#include <reentry/cfg/manager.hpp>
#include <reentry/ingest/ingest.hpp>
#include <reentry/verify/report.hpp>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace reentry;

namespace
{
    evm::ProgramPtr program_of(py::bytes const &code)
    {
        std::string s = code;
        return evm::make_program(evm::Bytecode{std::vector<std::uint8_t>(s.begin(), s.end())});
    }

    verify::Options options(unsigned workers, unsigned depth, unsigned loop_bound, std::size_t path_cap,
                            double solver_timeout, bool keep_ecfg)
    {
        if (workers == 0 || depth == 0 || loop_bound == 0 || path_cap == 0 || solver_timeout <= 0)
            throw py::value_error("bounds must be positive");
        verify::Options o;
        o.workers = workers;
        o.limits.call_depth = depth;
        o.limits.loop_bound = loop_bound;
        o.limits.path_cap = path_cap;
        o.solver_timeout = std::chrono::milliseconds(static_cast<long long>(solver_timeout * 1000));
        o.keep_ecfg = keep_ecfg;
        return o;
    }

    py::bytes to_bytes(evm::Bytecode const &b)
    {
        return py::bytes(reinterpret_cast<char const *>(b.bytes.data()), b.bytes.size());
    }
}

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Re-entrancy analysis of EVM runtime bytecode";

    py::register_exception<ingest::IngestError>(m, "IngestError", PyExc_ValueError);
    py::register_exception<smt::Indeterminate>(m, "Indeterminate", PyExc_RuntimeError);

    m.def("parse_hex", [](std::string const &text) {
        try
        {
            return to_bytes(evm::Bytecode{evm::parse_hex(text)});
        }
        catch (evm::HexError const &e)
        {
            throw py::value_error(std::string(e.what()) + " at offset " + std::to_string(e.position()));
        }
    }, py::arg("text"), "Decodes hex text, ignoring whitespace and a 0x prefix.");

    m.def("load_hex", [](std::string const &path) {
        auto loaded = ingest::load_hex(path);
        return py::make_tuple(to_bytes(loaded.code), loaded.warnings);
    }, py::arg("path"), "Reads a hex file; returns (code, warnings).");

    m.def("fetch_code", [](std::string const &address, std::string const &url, unsigned retries, double deadline) {
        ingest::FetchOptions o;
        o.retries = retries;
        o.deadline = std::chrono::milliseconds(static_cast<long long>(deadline * 1000));
        py::gil_scoped_release release;
        auto fetched = ingest::fetch_code(address, url, o);
        py::gil_scoped_acquire acquire;
        return to_bytes(fetched.code);
    }, py::arg("address"), py::arg("rpc_url"), py::arg("retries") = 2, py::arg("deadline") = 10.0);

    m.def("selector_of", [](std::string const &signature) { return evm::selector_of(signature).selector; },
          py::arg("signature"));

    m.def("disassemble", [](py::bytes const &code) {
        auto program = program_of(code);
        std::vector<std::pair<std::uint32_t, std::string>> out;
        for (auto const &ins : program->instructions())
            out.emplace_back(ins.offset, ins.to_string());
        return out;
    }, py::arg("code"));

    m.def("extract_functions", [](py::bytes const &code, unsigned loop_bound) {
        auto program = program_of(code);
        py::list out;
        std::vector<vm::FunctionInfo> functions;
        {
            py::gil_scoped_release release;
            smt::Solver solver;
            vm::Limits limits;
            limits.loop_bound = loop_bound;
            functions = vm::extract_function_ids(program, solver, limits, false).functions;
        }
        for (auto const &f : functions)
        {
            py::dict d;
            d["id"] = f.entry.to_string();
            d["name"] = f.name;
            d["has_call"] = f.has_call;
            d["paths"] = f.paths;
            out.append(d);
        }
        return out;
    }, py::arg("code"), py::arg("loop_bound") = 3);

    m.def("analyze_json", [](std::vector<std::pair<std::string, py::bytes>> const &targets, unsigned workers,
                             unsigned depth, unsigned loop_bound, std::size_t path_cap, double solver_timeout) {
        std::vector<verify::Target> ts;
        for (auto const &[label, code] : targets)
            ts.push_back({label, program_of(code)});
        auto opts = options(workers, depth, loop_bound, path_cap, solver_timeout, false);
        py::gil_scoped_release release;
        auto report = verify::analyze(ts, opts);
        return verify::to_json(report).dump();
    }, py::arg("targets"), py::arg("workers") = 1, py::arg("depth") = 8, py::arg("loop_bound") = 3,
       py::arg("path_cap") = 10000, py::arg("solver_timeout") = 60.0,
       "Analyzes (label, code) targets and returns the JSON report text.");

    m.def("extraction_dot", [](py::bytes const &code, std::string const &title) {
        auto program = program_of(code);
        smt::Solver solver;
        auto ex = vm::extract_function_ids(program, solver, {}, true);
        return cfg::export_dot(ex.run.ecfg, title);
    }, py::arg("code"), py::arg("title") = "contract");
}
