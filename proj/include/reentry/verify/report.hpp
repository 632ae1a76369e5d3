#pragma once

#include <reentry/verify/verifier.hpp>

#include <json.hpp>

#include <ostream>
#include <string>

namespace reentry::verify
{
    /// Version of the report layout. Fields are only ever added within a
    /// major version.
    inline constexpr char const *kReportSchema = "1.0";

    nlohmann::json to_json(Verdict const &v);
    nlohmann::json to_json(ContractReport const &c);
    nlohmann::json to_json(Report const &r);

    /// Plain-text table: contract, benign pairs, vulnerable pairs and the rest.
    void print_summary(std::ostream &os, Report const &r);
}
