#pragma once

#include <reentry/evm/bytecode.hpp>

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace reentry::testing
{
    inline std::string fixture_path(std::string const &name) { return std::string(REENTRY_FIXTURES) + "/" + name; }

    inline std::string read_text(std::string const &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    inline evm::ProgramPtr load_fixture(std::string const &stem)
    {
        return evm::make_program(evm::Bytecode{evm::parse_hex(read_text(fixture_path(stem + ".hex")))});
    }

    inline nlohmann::json load_meta(std::string const &stem)
    {
        return nlohmann::json::parse(read_text(fixture_path(stem + ".meta.json")));
    }

    inline std::uint32_t selector_from_meta(nlohmann::json const &meta, std::string const &signature)
    {
        return static_cast<std::uint32_t>(std::stoul(meta.at("methodIdentifiers").at(signature).get<std::string>(), nullptr, 16));
    }
}
