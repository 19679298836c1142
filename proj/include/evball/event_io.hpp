// Event stream file I/O.
//
// CSV:    first line "width,height,camera_id", then "t_ns,x,y,p" per line,
//         p in {-1,1}, UTF-8, LF line endings.
// Binary: magic "EVB1", u32 width, u32 height, u16 id length + id bytes,
//         then 16-byte little-endian records u64 t, u16 x, u16 y, i16 p,
//         u16 reserved=0.
#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evball/event.hpp"

namespace evball {

enum class FileFormat { csv, binary };

inline FileFormat infer_format(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
        return FileFormat::csv;
    return FileFormat::binary;
}

namespace detail {

inline std::int64_t parse_int(std::string_view s, const std::string& path, std::size_t line) {
    std::int64_t v = 0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw std::runtime_error(path + ":" + std::to_string(line) + ": malformed record");
    return v;
}

inline constexpr char kMagic[4] = {'E', 'V', 'B', '1'};

template <typename T>
void put_le(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return static_cast<T>(v);
}

inline void check_event(const Event& e, const StreamHeader& h, std::int64_t prev_t,
                        const std::string& path, const std::string& where) {
    if (!valid_polarity(e))
        throw std::runtime_error(path + ":" + where + ": polarity must be -1 or 1");
    if (!in_bounds(e, h))
        throw std::runtime_error(path + ":" + where + ": out-of-bounds coordinate (" +
                                 std::to_string(e.x) + "," + std::to_string(e.y) + ")");
    if (e.t < prev_t)
        throw std::runtime_error(path + ":" + where + ": timestamp regression");
}

}  // namespace detail

inline std::pair<StreamHeader, std::vector<Event>> read_events_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    StreamHeader header;
    std::vector<Event> events;
    std::size_t pos = 0, line_no = 0;
    std::int64_t prev_t = -1;
    while (pos < content.size()) {
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        std::string_view line(content.data() + pos, eol - pos);
        ++line_no;
        pos = eol + 1;
        if (line.empty()) continue;

        if (line_no == 1) {
            const auto c1 = line.find(',');
            const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
            if (c2 == std::string_view::npos)
                throw std::runtime_error(path + ":1: malformed header");
            header.width = static_cast<std::int32_t>(
                detail::parse_int(line.substr(0, c1), path, 1));
            header.height = static_cast<std::int32_t>(
                detail::parse_int(line.substr(c1 + 1, c2 - c1 - 1), path, 1));
            header.camera_id = std::string(line.substr(c2 + 1));
            validate_header(header);
            continue;
        }

        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
        const auto c3 = c2 == std::string_view::npos ? c2 : line.find(',', c2 + 1);
        if (c3 == std::string_view::npos || line.find(',', c3 + 1) != std::string_view::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed record");
        Event e;
        e.t = detail::parse_int(line.substr(0, c1), path, line_no);
        const std::int64_t x = detail::parse_int(line.substr(c1 + 1, c2 - c1 - 1), path, line_no);
        const std::int64_t y = detail::parse_int(line.substr(c2 + 1, c3 - c2 - 1), path, line_no);
        const std::int64_t p = detail::parse_int(line.substr(c3 + 1), path, line_no);
        if (e.t < 0 || x < 0 || x > 0xffff || y < 0 || y > 0xffff)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": out-of-bounds coordinate");
        e.x = static_cast<std::uint16_t>(x);
        e.y = static_cast<std::uint16_t>(y);
        e.p = static_cast<std::int16_t>(p);
        detail::check_event(e, header, prev_t, path, std::to_string(line_no));
        prev_t = e.t;
        events.push_back(e);
    }
    if (line_no == 0) throw std::runtime_error(path + ": empty file, missing header");
    return {std::move(header), std::move(events)};
}

inline std::pair<StreamHeader, std::vector<Event>> read_events_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* data = reinterpret_cast<const unsigned char*>(content.data());
    const std::size_t n = content.size();

    if (n < 14 || std::memcmp(data, detail::kMagic, 4) != 0)
        throw std::runtime_error(path + ": not an EVB1 file");
    StreamHeader header;
    header.width = static_cast<std::int32_t>(detail::get_le<std::uint32_t>(data + 4));
    header.height = static_cast<std::int32_t>(detail::get_le<std::uint32_t>(data + 8));
    const auto id_len = detail::get_le<std::uint16_t>(data + 12);
    std::size_t off = 14;
    if (n < off + id_len) throw std::runtime_error(path + ": truncated header");
    header.camera_id.assign(content.data() + off, id_len);
    off += id_len;
    validate_header(header);

    if ((n - off) % 16 != 0)
        throw std::runtime_error(path + ": offset " + std::to_string(n) +
                                 ": malformed record (truncated)");
    std::vector<Event> events;
    events.reserve((n - off) / 16);
    std::int64_t prev_t = -1;
    for (; off < n; off += 16) {
        Event e;
        e.t = static_cast<std::int64_t>(detail::get_le<std::uint64_t>(data + off));
        e.x = detail::get_le<std::uint16_t>(data + off + 8);
        e.y = detail::get_le<std::uint16_t>(data + off + 10);
        e.p = static_cast<std::int16_t>(detail::get_le<std::uint16_t>(data + off + 12));
        const auto reserved = detail::get_le<std::uint16_t>(data + off + 14);
        if (reserved != 0)
            throw std::runtime_error(path + ": offset " + std::to_string(off) +
                                     ": malformed record (reserved != 0)");
        detail::check_event(e, header, prev_t, path, "offset " + std::to_string(off));
        prev_t = e.t;
        events.push_back(e);
    }
    return {std::move(header), std::move(events)};
}

inline std::pair<StreamHeader, std::vector<Event>> read_events(const std::string& path,
                                                               FileFormat format) {
    return format == FileFormat::csv ? read_events_csv(path) : read_events_binary(path);
}

template <typename EventRange>
void validate_stream(const StreamHeader& header, const EventRange& events) {
    validate_header(header);
    std::int64_t prev_t = -1;
    for (const Event& e : events) {
        if (!valid_polarity(e)) throw std::runtime_error("event polarity must be -1 or 1");
        if (!in_bounds(e, header)) throw std::runtime_error("event coordinate out of bounds");
        if (e.t < prev_t) throw std::runtime_error("event timestamps must be non-decreasing");
        prev_t = e.t;
    }
}

inline void write_events_csv(const StreamHeader& header, const std::vector<Event>& events,
                             const std::string& path) {
    validate_stream(header, events);
    std::string out;
    out.reserve(32 + events.size() * 20);
    out += std::to_string(header.width);
    out += ',';
    out += std::to_string(header.height);
    out += ',';
    out += header.camera_id;
    out += '\n';
    char buf[64];
    for (const Event& e : events) {
        const int len = std::snprintf(buf, sizeof(buf), "%lld,%u,%u,%d\n",
                                      static_cast<long long>(e.t), unsigned(e.x), unsigned(e.y),
                                      int(e.p));
        out.append(buf, static_cast<std::size_t>(len));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error(path + ": write failed");
}

inline void write_events_binary(const StreamHeader& header, const std::vector<Event>& events,
                                const std::string& path) {
    validate_stream(header, events);
    if (header.camera_id.size() > 0xffff)
        throw std::invalid_argument("camera_id longer than 65535 bytes");
    std::string out;
    out.reserve(14 + header.camera_id.size() + events.size() * 16);
    out.append(detail::kMagic, 4);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.width));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.height));
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(header.camera_id.size()));
    out += header.camera_id;
    for (const Event& e : events) {
        detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(e.t));
        detail::put_le<std::uint16_t>(out, e.x);
        detail::put_le<std::uint16_t>(out, e.y);
        detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.p));
        detail::put_le<std::uint16_t>(out, 0);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error(path + ": write failed");
}

inline void write_events(const StreamHeader& header, const std::vector<Event>& events,
                         const std::string& path, FileFormat format) {
    if (format == FileFormat::csv)
        write_events_csv(header, events, path);
    else
        write_events_binary(header, events, path);
}

}  // namespace evball
