#include <reentry/ingest/ingest.hpp>

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

namespace reentry::ingest
{
    using nlohmann::json;
    using Clock = std::chrono::steady_clock;

    Loaded load_hex(std::filesystem::path const &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw IoError("cannot open " + path.string());
        std::ostringstream text;
        text << in.rdbuf();
        if (in.bad())
            throw IoError("cannot read " + path.string());
        Loaded out;
        out.code.origin = evm::CodeOrigin::File;
        try
        {
            out.code.bytes = evm::parse_hex(text.str());
        }
        catch (evm::HexError const &e)
        {
            throw NonHexCharacter(path.string() + ": " + e.what(), e.position());
        }
        if (out.code.empty())
            out.warnings.push_back(path.string() + " holds no code");
        return out;
    }

    std::string normalize_address(std::string const &text)
    {
        static std::regex const re("^\\s*(0[xX])?([0-9a-fA-F]{40})\\s*$");
        std::smatch m;
        if (!std::regex_match(text, m, re))
            throw InvalidAddress("not a 20-byte hex address: " + text);
        std::string hex = m[2].str();
        for (auto &c : hex)
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return "0x" + hex;
    }

    namespace
    {
        struct Endpoint
        {
            std::string origin; // scheme://host[:port]
            std::string path;
        };

        Endpoint split_url(std::string const &url)
        {
            static std::regex const re("^(https?://[^/]+)(/.*)?$");
            std::smatch m;
            if (!std::regex_match(url, m, re))
                throw RpcUnreachable("bad node URL: " + url);
            return {m[1].str(), m[2].matched ? m[2].str() : "/"};
        }

        std::string excerpt(std::string const &body)
        {
            return body.size() > 200 ? body.substr(0, 200) + "..." : body;
        }

        evm::Bytecode decode_result(std::string const &body)
        {
            json reply;
            try
            {
                reply = json::parse(body);
            }
            catch (json::parse_error const &)
            {
                throw RpcErrorResponse("malformed JSON-RPC reply: " + excerpt(body));
            }
            if (!reply.is_object())
                throw RpcErrorResponse("malformed JSON-RPC reply: " + excerpt(body));
            if (reply.contains("error"))
                throw RpcErrorResponse("node error: " + excerpt(reply["error"].dump()));
            if (!reply.contains("result") || !reply["result"].is_string())
                throw RpcErrorResponse("reply has no result: " + excerpt(body));
            evm::Bytecode code;
            code.origin = evm::CodeOrigin::RpcFetch;
            try
            {
                code.bytes = evm::parse_hex(reply["result"].get<std::string>());
            }
            catch (evm::HexError const &e)
            {
                throw RpcErrorResponse(std::string("result is not hex: ") + e.what());
            }
            return code;
        }
    }

    Fetched fetch_code(std::string const &address, std::string const &node_url, FetchOptions const &opts)
    {
        auto addr = normalize_address(address);
        auto ep = split_url(node_url);
        json request = {{"jsonrpc", "2.0"}, {"id", 1}, {"method", "eth_getCode"}, {"params", {addr, "latest"}}};
        std::string payload = request.dump();

        auto deadline = Clock::now() + opts.deadline;
        Fetched out;
        std::string last_error = "deadline exceeded";
        bool server_error = false;
        for (unsigned attempt = 0; attempt <= opts.retries; ++attempt)
        {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
            if (left.count() <= 0)
                break;
            httplib::Client client(ep.origin);
            if (!client.is_valid())
                throw RpcUnreachable("unsupported node URL: " + node_url);
            auto secs = std::chrono::duration_cast<std::chrono::seconds>(left);
            auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(left - secs);
            client.set_connection_timeout(secs.count(), usecs.count());
            client.set_read_timeout(secs.count(), usecs.count());
            client.set_write_timeout(secs.count(), usecs.count());

            ++out.attempts;
            auto res = client.Post(ep.path, payload, "application/json");
            if (!res)
            {
                last_error = httplib::to_string(res.error());
                server_error = false;
            }
            else if (res->status >= 500)
            {
                last_error = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
                server_error = true;
            }
            else if (res->status != 200)
                throw RpcErrorResponse("HTTP " + std::to_string(res->status) + ": " + excerpt(res->body));
            else
            {
                out.code = decode_result(res->body);
                if (out.code.empty())
                    throw EmptyCode(addr + " has no code (an externally owned account?)");
                return out;
            }
            if (attempt < opts.retries)
            {
                // short pause, capped by what is left of the deadline
                auto pause = std::min<Clock::duration>(std::chrono::milliseconds(100 << attempt),
                                                       std::max<Clock::duration>(deadline - Clock::now(), {}));
                std::this_thread::sleep_for(pause);
            }
        }
        if (server_error)
            throw RpcErrorResponse(last_error);
        throw RpcUnreachable(node_url + ": " + last_error);
    }

    std::optional<std::string> default_rpc_url()
    {
        char const *v = std::getenv("ETH_RPC_URL");
        if (!v || !*v)
            return std::nullopt;
        return std::string(v);
    }
}
