#pragma once

#include <reentry/evm/bytecode.hpp>

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace reentry::ingest
{
    class IngestError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class IoError : public IngestError
    {
    public:
        using IngestError::IngestError;
    };

    class NonHexCharacter : public IngestError
    {
    public:
        NonHexCharacter(std::string const &what, std::size_t position) : IngestError(what), position_(position) {}
        /// Offset within the hex text after whitespace and 0x are removed.
        std::size_t position() const { return position_; }

    private:
        std::size_t position_;
    };

    class InvalidAddress : public IngestError
    {
    public:
        using IngestError::IngestError;
    };

    class RpcUnreachable : public IngestError
    {
    public:
        using IngestError::IngestError;
    };

    class RpcErrorResponse : public IngestError
    {
    public:
        using IngestError::IngestError;
    };

    class EmptyCode : public IngestError
    {
    public:
        using IngestError::IngestError;
    };

    struct Loaded
    {
        evm::Bytecode code;
        std::vector<std::string> warnings;
    };

    /// Reads a hex file, tolerating whitespace and a 0x prefix.
    Loaded load_hex(std::filesystem::path const &path);

    /// Lower-case 0x-prefixed form of a 20-byte address.
    std::string normalize_address(std::string const &text);

    struct FetchOptions
    {
        unsigned retries = 2;
        std::chrono::milliseconds deadline{10000};
    };

    struct Fetched
    {
        evm::Bytecode code;
        unsigned attempts = 0;
    };

    /// eth_getCode(address, "latest") against a JSON-RPC node. Transport
    /// failures and 5xx answers are retried up to opts.retries times, all
    /// within opts.deadline.
    Fetched fetch_code(std::string const &address, std::string const &node_url, FetchOptions const &opts = {});

    /// Node URL from ETH_RPC_URL, if set and non-empty.
    std::optional<std::string> default_rpc_url();
}
