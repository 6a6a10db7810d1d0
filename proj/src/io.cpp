#include "biofuse/io.hpp"

#include "biofuse/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unordered_set>

namespace biofuse::io {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail(ErrorCode::Io, "cannot read '" + path.string() + "'");
    return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) fail(ErrorCode::Io, "cannot create directory '" + path.parent_path().string() + "'");
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) fail(ErrorCode::Io, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorCode::Io, "cannot move output into place at '" + path.string() + "'");
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
        if (!line.empty()) {
            std::vector<std::string> cells;
            std::size_t a = 0;
            while (true) {
                const std::size_t b = line.find(',', a);
                cells.emplace_back(trim(line.substr(a, b == std::string_view::npos ? line.size() - a : b - a)));
                if (b == std::string_view::npos) break;
                a = b + 1;
            }
            rows.push_back(std::move(cells));
        }
        pos = end + 1;
    }
    return rows;
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto r = std::from_chars(first, last, v);
    if (r.ec != std::errc() || r.ptr != last)
        fail(ErrorCode::Parse, "line " + std::to_string(line) + ": '" + s + "' is not a number");
    return v;
}

void require_width(const std::vector<std::string>& row, std::size_t width, std::size_t line) {
    if (row.size() != width)
        fail(ErrorCode::Parse, "line " + std::to_string(line) + ": expected " + std::to_string(width) +
                                   " fields, found " + std::to_string(row.size()));
}

} // namespace

std::string spectra_to_csv(const std::vector<Spectrum>& batch) {
    if (batch.empty()) fail(ErrorCode::InvalidInput, "no spectra to write");
    const auto& grid = batch.front().mz;
    for (const auto& s : batch)
        if (s.mz != grid) fail(ErrorCode::GridMismatch, "spectra do not share one m/z grid");
    std::string out = "mz";
    for (const auto& s : batch) out += "," + s.sample_id;
    out += '\n';
    for (std::size_t g = 0; g < grid.size(); ++g) {
        out += format_double(grid[g]);
        for (const auto& s : batch) {
            out += ',';
            out += format_double(s.intensity[g]);
        }
        out += '\n';
    }
    return out;
}

std::vector<Spectrum> spectra_from_csv(const std::string& text) {
    const auto rows = parse_csv(text);
    if (rows.empty()) fail(ErrorCode::Parse, "empty spectra file");
    const auto& header = rows.front();
    if (header.size() < 2 || header[0] != "mz") fail(ErrorCode::Parse, "spectra header must be 'mz,<id>,...'");
    std::vector<Spectrum> batch(header.size() - 1);
    for (std::size_t k = 0; k < batch.size(); ++k) batch[k].sample_id = header[k + 1];
    for (std::size_t r = 1; r < rows.size(); ++r) {
        require_width(rows[r], header.size(), r + 1);
        const double mz = parse_double(rows[r][0], r + 1);
        for (std::size_t k = 0; k < batch.size(); ++k) {
            batch[k].mz.push_back(mz);
            batch[k].intensity.push_back(parse_double(rows[r][k + 1], r + 1));
        }
    }
    for (const auto& s : batch) s.validate();
    return batch;
}

std::string dataset_to_csv(const Dataset& d) {
    std::string out = "sample_id";
    for (const auto& name : d.column_names) out += "," + name;
    out += '\n';
    for (std::size_t i = 0; i < d.n_samples(); ++i) {
        out += i < d.sample_ids.size() ? d.sample_ids[i] : std::to_string(i);
        for (double v : d.X.row(i)) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

Dataset dataset_from_csv(const std::string& text, SourceTag tag) {
    const auto rows = parse_csv(text);
    if (rows.empty()) fail(ErrorCode::Parse, "empty dataset file");
    const auto& header = rows.front();
    if (header.empty() || header[0] != "sample_id") fail(ErrorCode::Parse, "dataset header must start with 'sample_id'");
    Dataset d;
    const std::size_t p = header.size() - 1;
    d.column_names.assign(header.begin() + 1, header.end());
    d.column_tags.assign(p, tag);
    d.X = Matrix(rows.size() - 1, p);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        require_width(rows[r], header.size(), r + 1);
        d.sample_ids.push_back(rows[r][0]);
        for (std::size_t j = 0; j < p; ++j) d.X(r - 1, j) = parse_double(rows[r][j + 1], r + 1);
    }
    return d;
}

std::string labels_to_csv(const std::vector<std::string>& ids, const std::vector<Label>& labels) {
    if (ids.size() != labels.size()) fail(ErrorCode::LengthMismatch, "ids and labels differ in length");
    std::string out = "sample_id,label\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out += ids[i] + (is_case(labels[i]) ? ",1\n" : ",-1\n");
    return out;
}

std::vector<std::pair<std::string, Label>> labels_from_csv(const std::string& text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows.front().size() != 2 || rows.front()[0] != "sample_id")
        fail(ErrorCode::Parse, "labels header must be 'sample_id,label'");
    std::vector<std::pair<std::string, Label>> out;
    std::unordered_set<std::string> seen;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        require_width(rows[r], 2, r + 1);
        if (!seen.insert(rows[r][0]).second)
            fail(ErrorCode::Parse, "line " + std::to_string(r + 1) + ": duplicate sample id '" + rows[r][0] + "'");
        const auto& v = rows[r][1];
        Label l;
        if (v == "1" || v == "+1" || v == "case") l = Label::Case;
        else if (v == "-1" || v == "control") l = Label::Control;
        else fail(ErrorCode::Parse, "line " + std::to_string(r + 1) + ": unknown label '" + v + "'");
        out.emplace_back(rows[r][0], l);
    }
    return out;
}

} // namespace biofuse::io
