#include "sphand/manifest.hpp"

#include <fstream>
#include <sstream>

#include "sphand/errors.hpp"

namespace sphand {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

void RunManifest::write(std::ostream& out) const {
    out << "command = " << command << "\n";
    out << "version = " << version << "\n";
    out << "seed = " << seed << "\n";
    out << "duration_seconds = " << duration_seconds << "\n";
    for (const std::string& p : inputs) out << "input = " << p << "\n";
    for (const std::string& p : outputs) out << "output = " << p << "\n";
    for (const auto& [k, v] : config) out << "config." << k << " = " << v << "\n";
}

RunManifest RunManifest::read(std::istream& in) {
    RunManifest m;
    m.version.clear();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(line_no, "manifest line has no '='");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key == "command") {
            m.command = val;
        } else if (key == "version") {
            m.version = val;
        } else if (key == "seed") {
            try {
                m.seed = std::stoull(val);
            } catch (const std::exception&) {
                throw ParseError(line_no, "bad seed '" + val + "'");
            }
        } else if (key == "duration_seconds") {
            try {
                m.duration_seconds = std::stod(val);
            } catch (const std::exception&) {
                throw ParseError(line_no, "bad duration '" + val + "'");
            }
        } else if (key == "input") {
            m.inputs.push_back(val);
        } else if (key == "output") {
            m.outputs.push_back(val);
        } else if (key.rfind("config.", 0) == 0) {
            m.config[key.substr(7)] = val;
        } else {
            throw ParseError(line_no, "unknown manifest key '" + key + "'");
        }
    }
    if (m.command.empty()) throw ParseError(0, "manifest has no command");
    return m;
}

void RunManifest::write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(0, "cannot open manifest for writing: " + path);
    write(out);
    if (!out) throw ParseError(0, "failed writing manifest: " + path);
}

RunManifest RunManifest::read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(0, "cannot open manifest: " + path);
    return read(in);
}

} // namespace sphand
