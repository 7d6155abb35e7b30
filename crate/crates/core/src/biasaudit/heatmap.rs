use std::fmt::Write as _;

use super::TagShiftMatrix;

/// Long-format CSV: `attribute,tag,transition,tag_shift`. Not-computable
/// cells are left empty.
pub fn heatmap_csv(matrices: &[&TagShiftMatrix]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["attribute", "tag", "transition", "tag_shift"]).expect("in-memory write");
    for m in matrices {
        let names = m.transition_names();
        for (t, tag) in m.tags.iter().enumerate() {
            for (c, name) in names.iter().enumerate() {
                let v = m.get(t, c).map(|v| format!("{v:?}")).unwrap_or_default();
                w.write_record([m.attribute.as_str(), tag, name, &v]).expect("in-memory write");
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Blue for negative, red for positive, white at zero; the scale is
/// symmetric around zero.
fn color(v: f64, max_abs: f64) -> String {
    let x = if max_abs > 0.0 { (v / max_abs).clamp(-1.0, 1.0) } else { 0.0 };
    let fade = |a: f64| (255.0 * (1.0 - a.abs())).round() as u8;
    let (r, g, b) = if x >= 0.0 { (255, fade(x), fade(x)) } else { (fade(x), fade(x), 255) };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Standalone SVG heatmap: one row per tag, one column per transition.
pub fn heatmap_svg(m: &TagShiftMatrix) -> String {
    let (cell_w, cell_h, label_w, head_h) = (84.0, 18.0, 260.0, 40.0);
    let names = m.transition_names();
    let max_abs = m.cells.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let width = label_w + cell_w * names.len() as f64 + 10.0;
    let height = head_h + cell_h * m.tags.len() as f64 + 30.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="4" y="14" font-weight="bold">{} tag-shift (scale ±{:.3})</text>"#,
        m.attribute, max_abs
    );
    for (c, name) in names.iter().enumerate() {
        let x = label_w + cell_w * c as f64 + cell_w / 2.0;
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, head_h - 6.0, escape(name));
    }
    for (t, tag) in m.tags.iter().enumerate() {
        let y = head_h + cell_h * t as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, label_w - 6.0, y + 13.0, escape(tag));
        for c in 0..names.len() {
            let x = label_w + cell_w * c as f64;
            let (fill, label) = match m.get(t, c) {
                Some(v) => (color(v, max_abs), format!("{v:.2}")),
                None => ("#cccccc".to_string(), "n/a".to_string()),
            };
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" fill="{fill}" stroke="#ffffff"/><text x="{}" y="{}" text-anchor="middle">{label}</text>"##,
                x + cell_w / 2.0,
                y + 13.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
