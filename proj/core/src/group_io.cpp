#include "carnot/errors.hpp"
#include "carnot/io.hpp"

#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace carnot::io {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what)
{
    throw ParseError("line " + std::to_string(line) + ": " + what);
}

Rational parse_rational(const std::string& tok, std::size_t line)
{
    const auto slash = tok.find('/');
    try {
        std::size_t used = 0;
        if (slash == std::string::npos) {
            const long long v = std::stoll(tok, &used);
            if (used != tok.size())
                fail(line, "bad coefficient '" + tok + "'");
            return Rational(v);
        }
        const std::string a = tok.substr(0, slash);
        const std::string b = tok.substr(slash + 1);
        const long long num = std::stoll(a, &used);
        if (used != a.size())
            fail(line, "bad coefficient '" + tok + "'");
        const long long den = std::stoll(b, &used);
        if (used != b.size() || den == 0)
            fail(line, "bad coefficient '" + tok + "'");
        return Rational(num, den);
    } catch (const std::logic_error&) {
        fail(line, "bad coefficient '" + tok + "'");
    }
}

int parse_int(const std::string& tok, std::size_t line)
{
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used == tok.size())
            return v;
    } catch (const std::logic_error&) {
    }
    fail(line, "expected an integer, got '" + tok + "'");
}

std::string rational_text(const Rational& r)
{
    if (r.denominator() == 1)
        return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

} // namespace

StrataSpec parse_group_spec(std::istream& in)
{
    StrataSpec spec;
    std::string text;
    std::size_t line = 0;
    bool have_layers = false;
    while (std::getline(in, text)) {
        ++line;
        if (const auto hash = text.find('#'); hash != std::string::npos)
            text.resize(hash);
        std::istringstream ls(text);
        std::string key;
        if (!(ls >> key))
            continue;
        if (key == "name") {
            std::string rest;
            std::getline(ls >> std::ws, rest);
            while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.back())))
                rest.pop_back();
            spec.name = rest;
        } else if (key == "layers") {
            if (have_layers)
                fail(line, "duplicate layers line");
            std::string tok;
            while (ls >> tok)
                spec.layer_dims.push_back(parse_int(tok, line));
            if (spec.layer_dims.empty())
                fail(line, "layers needs at least one dimension");
            have_layers = true;
        } else if (key == "bracket") {
            std::vector<std::string> toks;
            std::string tok;
            while (ls >> tok)
                toks.push_back(tok);
            if (toks.size() < 8 || toks[4] != "->" || (toks.size() - 5) % 3 != 0)
                fail(line, "expected 'bracket i a j b -> k l c [k l c ...]'");
            BracketRule rule;
            rule.lhs = {parse_int(toks[0], line), parse_int(toks[1], line)};
            rule.rhs = {parse_int(toks[2], line), parse_int(toks[3], line)};
            for (std::size_t t = 5; t < toks.size(); t += 3)
                rule.terms.push_back(
                    {BasisRef{parse_int(toks[t], line), parse_int(toks[t + 1], line)}, parse_rational(toks[t + 2], line)});
            spec.brackets.push_back(std::move(rule));
        } else {
            fail(line, "unknown keyword '" + key + "'");
        }
    }
    if (!have_layers)
        throw ParseError("group spec has no layers line");
    return spec;
}

StrataSpec parse_group_spec(std::string_view text)
{
    std::istringstream in{std::string(text)};
    return parse_group_spec(in);
}

void write_group_spec(std::ostream& out, const GroupSpec& g)
{
    const StrataSpec& s = g.strata();
    if (!g.name().empty())
        out << "name " << g.name() << '\n';
    out << "layers";
    for (int d : s.layer_dims)
        out << ' ' << d;
    out << '\n';
    for (const BracketRule& b : s.brackets) {
        out << "bracket " << b.lhs.layer << ' ' << b.lhs.index << ' ' << b.rhs.layer << ' ' << b.rhs.index << " ->";
        for (const auto& [ref, c] : b.terms)
            out << ' ' << ref.layer << ' ' << ref.index << ' ' << rational_text(c);
        out << '\n';
    }
}

GroupSpec load_group(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open group spec " + path.string());
    StrataSpec spec = parse_group_spec(in);
    if (spec.name.empty())
        spec.name = path.stem().string();
    return make_group(std::move(spec));
}

GroupSpec resolve_group(std::string_view name_or_path)
{
    try {
        return builtin(name_or_path);
    } catch (const UnknownName&) {
        const std::filesystem::path p{std::string(name_or_path)};
        if (std::filesystem::exists(p))
            return load_group(p);
        throw;
    }
}

} // namespace carnot::io
