#pragma once

#include <string>
#include <utility>
#include <vector>

namespace scanline {

std::string xml_escape(const std::string& text);

// Minimal SVG assembly; coordinates in user units, emitted with %.6g.
class SvgWriter {
public:
    SvgWriter(double width, double height);

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& extra = "");
    void line(double x1, double y1, double x2, double y2,
              const std::string& stroke, double stroke_width);
    void polyline(const std::vector<std::pair<double, double>>& points,
                  const std::string& stroke, double stroke_width);
    // Closed filled region: the `upper` points followed by `lower` reversed.
    void band(const std::vector<std::pair<double, double>>& upper,
              const std::vector<std::pair<double, double>>& lower,
              const std::string& fill);
    void text(double x, double y, const std::string& content, double size,
              const std::string& fill = "#333333",
              const std::string& anchor = "start");

    std::string str() const;  // complete document

private:
    double width_;
    double height_;
    std::string body_;
};

}  // namespace scanline
