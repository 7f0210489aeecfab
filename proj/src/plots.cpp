#include "histowas/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "histowas/errors.hpp"

namespace histowas {

namespace {

const char* kSpatialColor = "#d62728";
const char* kObjectColor = "#1f77b4";

bool is_spatial_category(const std::string& cat) {
    return cat == "Density" || cat == "Spacing" || cat == "Correlation";
}

std::string fmt(double v, int decimals = 2) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string fmt_label(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string escape_text(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Maps a data interval onto pixel coordinates (y axes flip).
struct Scale {
    double lo = 0.0, hi = 1.0;
    double px_lo = 0.0, px_hi = 1.0;

    double operator()(double v) const {
        if (hi == lo) return 0.5 * (px_lo + px_hi);
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

struct SvgDoc {
    std::ostringstream body;
    double width, height;

    SvgDoc(double w, double h) : width(w), height(h) {
        body << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w, 0) << "\" height=\""
             << fmt(h, 0) << "\" viewBox=\"0 0 " << fmt(w, 0) << " " << fmt(h, 0) << "\">\n";
        body << "<rect x=\"0\" y=\"0\" width=\"" << fmt(w, 0) << "\" height=\"" << fmt(h, 0)
             << "\" fill=\"white\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& cls,
              const std::string& style) {
        body << "<line class=\"" << cls << "\" x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1)
             << "\" x2=\"" << fmt(x2) << "\" y2=\"" << fmt(y2) << "\" " << style << "/>\n";
    }

    void circle(double cx, double cy, double r, const std::string& cls, const std::string& fill) {
        body << "<circle class=\"" << cls << "\" cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy)
             << "\" r=\"" << fmt(r, 1) << "\" fill=\"" << fill << "\"/>\n";
    }

    void text(double x, double y, const std::string& content, const std::string& anchor,
              int size = 11) {
        body << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-family=\"sans-serif\" "
             << "font-size=\"" << size << "\" text-anchor=\"" << anchor << "\">"
             << escape_text(content) << "</text>\n";
    }

    std::string finish() {
        body << "</svg>\n";
        return body.str();
    }
};

struct Frame {
    double left, top, right, bottom;
};

void draw_frame(SvgDoc& doc, const Frame& f) {
    const std::string style = "stroke=\"#333333\" stroke-width=\"1\"";
    doc.line(f.left, f.bottom, f.right, f.bottom, "axis", style);
    doc.line(f.left, f.top, f.left, f.bottom, "axis", style);
}

void y_ticks(SvgDoc& doc, const Frame& f, const Scale& sy, int count) {
    for (int i = 0; i <= count; ++i) {
        const double v = sy.lo + (sy.hi - sy.lo) * i / count;
        const double y = sy(v);
        doc.line(f.left - 4, y, f.left, y, "tick", "stroke=\"#333333\" stroke-width=\"1\"");
        doc.text(f.left - 7, y + 4, fmt_label(v), "end", 10);
    }
}

void x_ticks(SvgDoc& doc, const Frame& f, const Scale& sx, int count) {
    for (int i = 0; i <= count; ++i) {
        const double v = sx.lo + (sx.hi - sx.lo) * i / count;
        const double x = sx(v);
        doc.line(x, f.bottom, x, f.bottom + 4, "tick", "stroke=\"#333333\" stroke-width=\"1\"");
        doc.text(x, f.bottom + 16, fmt_label(v), "middle", 10);
    }
}

}  // namespace

std::string render_manhattan_svg(const nlohmann::json& data) {
    if (data.value("kind", "") != "manhattan") throw Error("render_manhattan_svg: wrong plot kind");
    const auto& points = data.at("points");
    const double threshold_y = data.at("threshold").at("neg_log10_p").get<double>();

    const double W = 760, H = 420;
    const Frame f{60, 30, W - 20, H - 50};
    SvgDoc doc(W, H);

    double y_max = threshold_y;
    for (const auto& pt : points) y_max = std::max(y_max, pt.at("neg_log10_p").get<double>());
    const double x_max = std::max<double>(points.size(), 1) + 1.0;

    const Scale sx{0.0, x_max, f.left, f.right};
    const Scale sy{0.0, y_max * 1.08 + 1e-12, f.bottom, f.top};

    draw_frame(doc, f);
    y_ticks(doc, f, sy, 5);
    doc.text(14, (f.top + f.bottom) / 2, "-log10(p)", "middle", 11);
    doc.text((f.left + f.right) / 2, H - 10, "features sorted by p-value", "middle", 11);

    doc.line(f.left, sy(threshold_y), f.right, sy(threshold_y), "threshold",
             "stroke=\"#555555\" stroke-width=\"1\" stroke-dasharray=\"6,4\"");

    for (const auto& pt : points) {
        const double x = sx(pt.at("rank").get<double>());
        const double y = sy(pt.at("neg_log10_p").get<double>());
        const std::string color =
            is_spatial_category(pt.at("category").get<std::string>()) ? kSpatialColor : kObjectColor;
        doc.circle(x, y, 3.5, "pt", color);
    }

    doc.text(f.right, f.top - 8, "n=" + std::to_string(points.size()), "end", 10);
    return doc.finish();
}

std::string render_effect_size_svg(const nlohmann::json& data) {
    if (data.value("kind", "") != "effect_size") throw Error("render_effect_size_svg: wrong plot kind");
    const auto& points = data.at("points");

    if (points.empty()) {
        SvgDoc doc(520, 120);
        doc.text(260, 64, "no features passed the significance threshold", "middle", 13);
        return doc.finish();
    }

    const double row_h = 24;
    const double W = 760;
    const double H = 70 + row_h * static_cast<double>(points.size());
    const Frame f{250, 30, W - 30, H - 40};
    SvgDoc doc(W, H);

    double lo = 0.0, hi = 0.0;
    for (const auto& pt : points) {
        lo = std::min(lo, pt.at("ci_low").get<double>());
        hi = std::max(hi, pt.at("ci_high").get<double>());
    }
    const double pad = 0.08 * (hi - lo + 1e-12);
    const Scale sx{lo - pad, hi + pad, f.left, f.right};

    draw_frame(doc, f);
    x_ticks(doc, f, sx, 5);
    doc.text((f.left + f.right) / 2, H - 8, "beta (per SD) with 95% CI", "middle", 11);
    doc.line(sx(0.0), f.top, sx(0.0), f.bottom, "zero",
             "stroke=\"#888888\" stroke-width=\"1\" stroke-dasharray=\"4,3\"");

    double y = f.top + row_h / 2;
    for (const auto& pt : points) {
        const std::string color =
            is_spatial_category(pt.at("category").get<std::string>()) ? kSpatialColor : kObjectColor;
        doc.text(f.left - 8, y + 4, pt.at("feature").get<std::string>(), "end", 10);
        doc.line(sx(pt.at("ci_low").get<double>()), y, sx(pt.at("ci_high").get<double>()), y, "ci",
                 "stroke=\"" + std::string(color) + "\" stroke-width=\"2\"");
        doc.circle(sx(pt.at("beta").get<double>()), y, 4.0, "beta", color);
        y += row_h;
    }
    return doc.finish();
}

std::string render_envelope_svg(const nlohmann::json& data) {
    if (data.value("kind", "") != "envelope_panel") throw Error("render_envelope_svg: wrong plot kind");
    const auto& functions = data.at("functions");
    const std::size_t n_panels = functions.size();
    if (n_panels == 0) throw Error("render_envelope_svg: no functions");

    const double panel_w = 330, panel_h = 300, W = panel_w * static_cast<double>(n_panels), H = panel_h;
    SvgDoc doc(W, H);

    for (std::size_t pi = 0; pi < n_panels; ++pi) {
        const auto& fn = functions[pi];
        const std::vector<double> radii = fn.at("radii").get<std::vector<double>>();
        const std::vector<double> lower = fn.at("lower").get<std::vector<double>>();
        const std::vector<double> upper = fn.at("upper").get<std::vector<double>>();
        const std::vector<double> theo = fn.at("theoretical").get<std::vector<double>>();

        const double x0 = panel_w * static_cast<double>(pi);
        const Frame f{x0 + 52, 34, x0 + panel_w - 16, panel_h - 44};

        double y_lo = lower[0], y_hi = upper[0];
        for (std::size_t g = 0; g < radii.size(); ++g) {
            y_lo = std::min({y_lo, lower[g], theo[g]});
            y_hi = std::max({y_hi, upper[g], theo[g]});
        }
        for (const auto& sample : fn.at("samples")) {
            for (const auto& v : sample) {
                if (v.is_null()) continue;
                const double value = v.get<double>();
                y_lo = std::min(y_lo, value);
                y_hi = std::max(y_hi, value);
            }
        }
        const double pad = 0.06 * (y_hi - y_lo + 1e-12);
        const Scale sx{0.0, radii.back(), f.left, f.right};
        const Scale sy{y_lo - pad, y_hi + pad, f.bottom, f.top};

        // Envelope band
        std::ostringstream band;
        for (std::size_t g = 0; g < radii.size(); ++g) {
            band << fmt(sx(radii[g])) << "," << fmt(sy(upper[g])) << " ";
        }
        for (std::size_t g = radii.size(); g > 0; --g) {
            band << fmt(sx(radii[g - 1])) << "," << fmt(sy(lower[g - 1]));
            if (g > 1) band << " ";
        }
        doc.body << "<polygon class=\"band\" points=\"" << band.str()
                 << "\" fill=\"#d0d0d0\" stroke=\"none\"/>\n";

        for (const auto& sample : fn.at("samples")) {
            std::ostringstream pts;
            bool first = true;
            for (std::size_t g = 0; g < radii.size() && g < sample.size(); ++g) {
                if (sample[g].is_null()) continue;
                if (!first) pts << " ";
                pts << fmt(sx(radii[g])) << "," << fmt(sy(sample[g].get<double>()));
                first = false;
            }
            doc.body << "<polyline class=\"sample\" points=\"" << pts.str()
                     << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"0.4\" "
                        "stroke-opacity=\"0.35\"/>\n";
        }

        std::ostringstream tpts;
        for (std::size_t g = 0; g < radii.size(); ++g) {
            if (g > 0) tpts << " ";
            tpts << fmt(sx(radii[g])) << "," << fmt(sy(theo[g]));
        }
        doc.body << "<polyline class=\"theoretical\" points=\"" << tpts.str()
                 << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" "
                    "stroke-dasharray=\"7,4\"/>\n";

        draw_frame(doc, f);
        x_ticks(doc, f, sx, 4);
        y_ticks(doc, f, sy, 4);
        doc.text((f.left + f.right) / 2, 20, fn.at("function").get<std::string>() + "(r)", "middle", 13);
        doc.text((f.left + f.right) / 2, panel_h - 8, "r", "middle", 11);
    }
    return doc.finish();
}

void write_svg(const std::string& svg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << svg;
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace histowas
