#include "ridgeline/dataset_io.hpp"

#include "ridgeline/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace ridgeline {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

double parse_cell(std::string_view cell, std::size_t line_no) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || cell.empty()) {
        throw ParseError("non-numeric cell '" + std::string(cell) + "'", line_no);
    }
    return v;
}

}  // namespace

std::string dataset_header(Eigen::Index joints) {
    std::string h = "t";
    for (const char* prefix : {"q", "dq", "ddq", "y"}) {
        for (Eigen::Index i = 1; i <= joints; ++i) {
            h += ',';
            h += prefix;
            h += std::to_string(i);
        }
    }
    return h;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error("failed to format double");
    return std::string(buf, ptr);
}

std::string dataset_to_csv(const Dataset& d) {
    d.validate();
    // An empty dataset has no joint count; fall back to the two-link arm.
    const Eigen::Index n = d.empty() ? kArmJoints : d.joints();
    std::string out = dataset_header(n);
    out += '\n';
    for (const Sample& s : d.samples) {
        out += format_double(s.t);
        for (const Eigen::VectorXd* v : {&s.x.q, &s.x.dq, &s.x.ddq, &s.y}) {
            for (Eigen::Index i = 0; i < v->size(); ++i) {
                out += ',';
                out += format_double((*v)[i]);
            }
        }
        out += '\n';
    }
    return out;
}

Dataset dataset_from_csv(std::string_view text) {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end + 1;
        ++line_no;
        return true;
    };

    std::string_view line;
    if (!next_line(line)) throw ParseError("missing header", 1);
    const auto header = split_commas(line);
    if (header.size() < 5 || (header.size() - 1) % 4 != 0) {
        throw ParseError("malformed header '" + std::string(line) + "'", line_no);
    }
    const auto n = static_cast<Eigen::Index>((header.size() - 1) / 4);
    if (std::string(line) != dataset_header(n)) {
        throw ParseError("malformed header, expected '" + dataset_header(n) + "'", line_no);
    }

    Dataset d;
    const std::size_t columns = header.size();
    while (next_line(line)) {
        if (line.empty()) {
            if (pos >= text.size()) break;
            throw ParseError("empty row", line_no);
        }
        const auto cells = split_commas(line);
        if (cells.size() != columns) {
            throw ParseError("ragged row with " + std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(columns),
                             line_no);
        }
        Sample s;
        s.t = parse_cell(cells[0], line_no);
        Eigen::VectorXd q(n), dq(n), ddq(n), y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            q[i] = parse_cell(cells[1 + i], line_no);
            dq[i] = parse_cell(cells[1 + n + i], line_no);
            ddq[i] = parse_cell(cells[1 + 2 * n + i], line_no);
            y[i] = parse_cell(cells[1 + 3 * n + i], line_no);
        }
        s.x = JointState(std::move(q), std::move(dq), std::move(ddq));
        s.y = std::move(y);
        d.samples.push_back(std::move(s));
    }

    if (d.samples.size() >= 2) {
        const double dt = d.samples[1].t - d.samples[0].t;
        if (!(dt > 0.0)) throw ParseError("timestamps must be strictly increasing", 3);
        // Rates are stored at micro-hertz resolution so 1/dt round-off does not leak in.
        d.rate = std::round(1e6 / dt) / 1e6;
    }
    try {
        d.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), 0);
    }
    return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    write_file_atomic(path, dataset_to_csv(d));
}

Dataset load_dataset(const std::filesystem::path& path) {
    try {
        return dataset_from_csv(read_file(path));
    } catch (const ParseError& e) {
        throw e.with_context(path.string());
    }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace ridgeline
