#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "provrefine/analysis.hpp"
#include "provrefine/datalog.hpp"
#include "provrefine/error.hpp"
#include "provrefine/io.hpp"

namespace provrefine {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

Parameter parse_param(std::string_view line, std::size_t line_no) {
    Parameter p;
    std::size_t i = 0;
    auto next_token = [&]() -> std::string_view {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t start = i;
        int depth = 0;
        while (i < line.size() && (depth > 0 || !std::isspace(static_cast<unsigned char>(line[i])))) {
            if (line[i] == '(') ++depth;
            if (line[i] == ')') --depth;
            ++i;
        }
        return line.substr(start, i - start);
    };
    p.name = std::string(next_token());
    if (p.name.empty()) throw ParseError(line_no, "parameter without a name");
    for (std::string_view tok = next_token(); !tok.empty(); tok = next_token()) {
        auto eq = tok.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected encode0=fact or encode1=fact");
        std::string_view key = tok.substr(0, eq);
        Fact f = parse_fact(tok.substr(eq + 1), line_no);
        if (key == "encode0") p.encode0 = f;
        else if (key == "encode1") p.encode1 = f;
        else throw ParseError(line_no, "unknown parameter attribute '" + std::string(key) + "'");
    }
    if (!p.encode0.valid() || !p.encode1.valid())
        throw ParseError(line_no, "parameter " + p.name + " needs both encode0 and encode1");
    return p;
}

}  // namespace

Analysis build_analysis(std::string name, const Program& prog, std::vector<Parameter> params, FactSet queries,
                        Projection projection, const DomainBounds& bounds) {
    FactSet seeds;
    for (const Parameter& p : params) {
        seeds.insert(p.encode0);
        seeds.insert(p.encode1);
    }
    Analysis an;
    an.name = std::move(name);
    an.global = ground(prog, bounds, seeds);
    an.queries = std::move(queries);
    an.params = std::move(params);
    an.projection = std::move(projection);
    return an;
}

Analysis parse_manifest(std::string_view text, const std::function<std::string(const std::string&)>& read_file) {
    enum class Section { none, params, queries, projection };
    Section section = Section::none;
    std::string name, rules_path, prov_path;
    DomainBounds bounds;
    std::vector<Parameter> params;
    FactSet queries;
    Projection projection;

    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
        line = trim(line);
        if (line.empty()) continue;

        auto colon = line.find(':');
        std::string_view key = colon == std::string_view::npos ? std::string_view{} : trim(line.substr(0, colon));
        std::string_view value = colon == std::string_view::npos ? std::string_view{} : trim(line.substr(colon + 1));
        if (key == "params" || key == "queries" || key == "projection") {
            section = key == "params" ? Section::params : key == "queries" ? Section::queries : Section::projection;
            if (value.empty()) continue;
            line = value;
        } else if (key == "name") {
            name = std::string(value);
            continue;
        } else if (key == "rules") {
            rules_path = std::string(value);
            continue;
        } else if (key == "provenance") {
            prov_path = std::string(value);
            continue;
        } else if (key == "domain") {
            std::istringstream ds{std::string(value)};
            if (!(ds >> bounds.lo >> bounds.hi) || bounds.lo > bounds.hi)
                throw ParseError(line_no, "domain expects two integers lo hi");
            continue;
        }

        switch (section) {
            case Section::params: params.push_back(parse_param(line, line_no)); break;
            case Section::queries:
                for (Fact f : parse_fact_list(line, line_no)) queries.insert(f);
                break;
            case Section::projection: projection.parse_directive(line, line_no); break;
            case Section::none: throw ParseError(line_no, "entry outside of any section");
        }
    }
    if (rules_path.empty() == prov_path.empty())
        throw ParseError(line_no, "manifest needs exactly one of rules: or provenance:");

    for (std::size_t i = 0; i < params.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (params[i].name == params[j].name) throw ParseError(0, "duplicate parameter " + params[i].name);

    if (!rules_path.empty()) {
        Program prog = parse_program(read_file(rules_path));
        return build_analysis(name, prog, std::move(params), std::move(queries), std::move(projection), bounds);
    }
    Analysis an;
    an.name = name;
    an.global = parse_provenance(read_file(prov_path));
    an.queries = std::move(queries);
    an.params = std::move(params);
    an.projection = std::move(projection);
    return an;
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot read file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidArgument("cannot write file " + path);
    f << contents;
    if (!f) throw InvalidArgument("error writing file " + path);
}

Analysis load_manifest(const std::string& path) {
    std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::string text = read_text_file(path);
    Analysis an = parse_manifest(text, [&](const std::string& rel) {
        std::filesystem::path p(rel);
        return read_text_file(p.is_absolute() ? p.string() : (base / p).string());
    });
    if (an.name.empty()) an.name = std::filesystem::path(path).stem().string();
    return an;
}

}  // namespace provrefine
