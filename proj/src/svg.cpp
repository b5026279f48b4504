#include "scanline/svg.hpp"

#include <cstdio>

namespace scanline {
namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::string xml_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char ch : text) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(ch);
        }
    }
    return out;
}

SvgWriter::SvgWriter(double width, double height)
    : width_(width), height_(height) {}

void SvgWriter::rect(double x, double y, double w, double h,
                     const std::string& fill, const std::string& extra) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
             "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"" +
             (extra.empty() ? "" : " " + extra) + "/>\n";
}

void SvgWriter::line(double x1, double y1, double x2, double y2,
                     const std::string& stroke, double stroke_width) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
             "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
             num(stroke_width) + "\"/>\n";
}

void SvgWriter::polyline(const std::vector<std::pair<double, double>>& points,
                         const std::string& stroke, double stroke_width) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
             num(stroke_width) + "\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
        body_ += (i ? " " : "") + num(points[i].first) + "," + num(points[i].second);
    }
    body_ += "\"/>\n";
}

void SvgWriter::band(const std::vector<std::pair<double, double>>& upper,
                     const std::vector<std::pair<double, double>>& lower,
                     const std::string& fill) {
    body_ += "<path fill=\"" + fill + "\" stroke=\"none\" d=\"";
    for (std::size_t i = 0; i < upper.size(); ++i) {
        body_ += (i == 0 ? "M" : "L");
        body_ += num(upper[i].first) + " " + num(upper[i].second) + " ";
    }
    for (std::size_t i = lower.size(); i-- > 0;) {
        body_ += "L" + num(lower[i].first) + " " + num(lower[i].second) + " ";
    }
    body_ += "Z\"/>\n";
}

void SvgWriter::text(double x, double y, const std::string& content, double size,
                     const std::string& fill, const std::string& anchor) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" +
             num(size) + "\" font-family=\"sans-serif\" fill=\"" + fill +
             "\" text-anchor=\"" + anchor + "\">" + xml_escape(content) +
             "</text>\n";
}

std::string SvgWriter::str() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " +
           num(width_) + " " + num(height_) + "\">\n" + body_ + "</svg>\n";
}

}  // namespace scanline
