//! Shared domain types: field coordinates, pass outcomes, chart metadata,
//! and the pass-count arithmetic the extraction pipeline depends on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Field width in yards (NFL regulation, 160 feet).
pub const FIELD_WIDTH_YARDS: f64 = 53.33;
/// Half the field width; lateral coordinates live in `[-HALF_WIDTH, HALF_WIDTH]`.
pub const HALF_WIDTH_YARDS: f64 = FIELD_WIDTH_YARDS / 2.0;
/// Yards of field shown behind the line of scrimmage on every chart.
pub const YARDS_BEHIND_LOS: f64 = 10.0;

/// A pass endpoint in yards relative to the line of scrimmage.
///
/// `x` is the downfield distance (negative = behind the line of scrimmage),
/// `y` the lateral offset from the center of the field. Positive `y`
/// corresponds to increasing pixel column in a rectified chart (image
/// right); whether that is the offense's left or right is a convention
/// the charts themselves do not pin down.
///
/// Note the published CSV schema swaps the axes: its `x_coord` column
/// holds the lateral offset and `y_coord` the downfield distance. See
/// [`CSV_HEADER`] and [`PassRecord::csv_row`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldCoordinate {
    /// Yards downfield from the line of scrimmage.
    pub x: f64,
    /// Yards from field center.
    pub y: f64,
}

impl FieldCoordinate {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Bounds check against the largest chart extent (10 yards behind the
    /// line of scrimmage, up to 75 beyond, sideline to sideline).
    pub fn in_bounds(&self) -> bool {
        self.x >= -YARDS_BEHIND_LOS
            && self.x <= 75.0
            && self.y.abs() <= HALF_WIDTH_YARDS
    }

    /// Clamp into the chart extent for the given depth.
    pub fn clamped(&self, depth_yards: f64) -> Self {
        Self {
            x: self.x.clamp(-YARDS_BEHIND_LOS, depth_yards - YARDS_BEHIND_LOS),
            y: self.y.clamp(-HALF_WIDTH_YARDS, HALF_WIDTH_YARDS),
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Outcome of a pass as color-coded on the charts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PassOutcome {
    Complete,
    Incomplete,
    Touchdown,
    Interception,
}

impl PassOutcome {
    pub const ALL: [PassOutcome; 4] = [
        PassOutcome::Complete,
        PassOutcome::Incomplete,
        PassOutcome::Touchdown,
        PassOutcome::Interception,
    ];

    /// Label used in the output CSV (`COMPLETE`, `INCOMPLETE`, ...).
    pub fn label(&self) -> &'static str {
        match self {
            PassOutcome::Complete => "COMPLETE",
            PassOutcome::Incomplete => "INCOMPLETE",
            PassOutcome::Touchdown => "TOUCHDOWN",
            PassOutcome::Interception => "INTERCEPTION",
        }
    }

    pub fn from_label(s: &str) -> Option<PassOutcome> {
        match s.to_ascii_uppercase().as_str() {
            "COMPLETE" => Some(PassOutcome::Complete),
            "INCOMPLETE" => Some(PassOutcome::Incomplete),
            "TOUCHDOWN" => Some(PassOutcome::Touchdown),
            "INTERCEPTION" => Some(PassOutcome::Interception),
            _ => None,
        }
    }

    /// Whether the pass counts as a completion for modeling purposes
    /// (touchdowns are completions; interceptions are incompletions).
    pub fn is_completion(&self) -> bool {
        matches!(self, PassOutcome::Complete | PassOutcome::Touchdown)
    }
}

/// Regular season or postseason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SeasonType {
    #[default]
    Reg,
    Post,
}

impl SeasonType {
    pub fn label(&self) -> &'static str {
        match self {
            SeasonType::Reg => "reg",
            SeasonType::Post => "post",
        }
    }
}

/// Per-chart metadata as published alongside each chart image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ChartMetadata {
    /// Number of completions thrown, touchdowns included.
    pub completions: u32,
    pub touchdowns: u32,
    pub attempts: u32,
    pub interceptions: u32,
    /// File path or URL of the chart image.
    #[serde(default)]
    pub image_ref: String,
    /// Week label, e.g. `"5"`, `"wild-card"`, `"super-bowl"`.
    #[serde(default)]
    pub week: String,
    /// 10-digit game identifier.
    #[serde(default)]
    pub game_id: String,
    pub season: u32,
    #[serde(default)]
    pub first_name: String,
    #[serde(default)]
    pub last_name: String,
    #[serde(default)]
    pub team: String,
    #[serde(default)]
    pub position: String,
    #[serde(default)]
    pub season_type: SeasonType,
}

impl ChartMetadata {
    pub fn player_name(&self) -> String {
        match (self.first_name.is_empty(), self.last_name.is_empty()) {
            (true, true) => String::new(),
            (true, false) => self.last_name.clone(),
            (false, true) => self.first_name.clone(),
            (false, false) => format!("{} {}", self.first_name, self.last_name),
        }
    }
}

/// Pass counts derived from chart metadata.
///
/// `n_c` is the number of green completion markers (total completions
/// minus touchdowns, which get their own color); `n_inc` the number of
/// incompletions implied by the attempt count; `n_inc_adj` the number of
/// incompletion markers actually found on the image, which may be lower
/// when passes (out-of-bounds throws, spikes) are counted but not drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassCounts {
    pub n_c: u32,
    pub n_td: u32,
    pub n_int: u32,
    pub n_inc: u32,
    pub n_inc_adj: u32,
}

impl PassCounts {
    pub fn total(&self) -> u32 {
        self.n_c + self.n_td + self.n_int + self.n_inc
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CountError {
    #[error("inconsistent metadata: {0}")]
    InconsistentMetadata(String),
}

/// Derive marker counts from chart metadata.
///
/// The completion total on a chart includes touchdowns, which are drawn
/// in their own color, so the green-marker count is
/// `completions - touchdowns`; incompletions are whatever attempts
/// remain after completions and interceptions.
pub fn derive_counts(meta: &ChartMetadata) -> Result<PassCounts, CountError> {
    let n_td = meta.touchdowns;
    if meta.completions < n_td {
        return Err(CountError::InconsistentMetadata(format!(
            "touchdowns ({}) exceed completions ({})",
            n_td, meta.completions
        )));
    }
    let n_c = meta.completions - n_td;
    let spoken_for = n_c + n_td + meta.interceptions;
    if meta.attempts < spoken_for {
        return Err(CountError::InconsistentMetadata(format!(
            "attempts ({}) fewer than completions + interceptions ({})",
            meta.attempts, spoken_for
        )));
    }
    let n_inc = meta.attempts - spoken_for;
    Ok(PassCounts {
        n_c,
        n_td,
        n_int: meta.interceptions,
        n_inc,
        n_inc_adj: n_inc,
    })
}

/// One extracted pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassRecord {
    pub game_id: String,
    pub team: String,
    pub week: String,
    pub name: String,
    pub pass_type: PassOutcome,
    /// `None` for incompletions counted in the metadata but not drawn on
    /// the chart.
    pub coord: Option<FieldCoordinate>,
    pub season_type: SeasonType,
    pub home_team: Option<String>,
    pub away_team: Option<String>,
    pub season: u32,
}

/// Output CSV column order.
///
/// `x_coord` holds the lateral offset from the center of the field and
/// `y_coord` the downfield distance from the line of scrimmage — the
/// published schema's axes, which are swapped relative to
/// [`FieldCoordinate`].
pub const CSV_HEADER: [&str; 11] = [
    "game_id",
    "team",
    "week",
    "name",
    "pass_type",
    "x_coord",
    "y_coord",
    "type",
    "home_team",
    "away_team",
    "season",
];

impl PassRecord {
    pub fn csv_row(&self) -> [String; 11] {
        let (x_coord, y_coord) = match self.coord {
            Some(c) => (format!("{:.1}", c.y), format!("{:.1}", c.x)),
            None => (String::new(), String::new()),
        };
        [
            self.game_id.clone(),
            self.team.clone(),
            self.week.clone(),
            self.name.clone(),
            self.pass_type.label().to_string(),
            x_coord,
            y_coord,
            self.season_type.label().to_string(),
            self.home_team.clone().unwrap_or_default(),
            self.away_team.clone().unwrap_or_default(),
            self.season.to_string(),
        ]
    }
}

/// Write records in the output CSV schema.
pub fn write_records_csv<W: std::io::Write>(
    records: &[PassRecord],
    w: W,
) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for r in records {
        wtr.write_record(r.csv_row())?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read records written by [`write_records_csv`]. Rows with unknown pass
/// types or unparseable coordinates are returned in the error list by
/// (1-based) line number rather than aborting the read.
pub fn read_records_csv<R: std::io::Read>(
    r: R,
) -> Result<(Vec<PassRecord>, Vec<(u64, String)>), csv::Error> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let headers = rdr.headers()?.clone();
    let idx = |name: &str| headers.iter().position(|h| h == name);
    let cols: Vec<Option<usize>> = CSV_HEADER.iter().map(|h| idx(h)).collect();
    let field = |rec: &csv::StringRecord, i: usize| -> String {
        cols[i]
            .and_then(|c| rec.get(c))
            .unwrap_or_default()
            .to_string()
    };

    let mut out = Vec::new();
    let mut errors = Vec::new();
    for result in rdr.records() {
        let rec = result?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let pass_type = match PassOutcome::from_label(&field(&rec, 4)) {
            Some(p) => p,
            None => {
                errors.push((line, format!("unknown pass_type {:?}", field(&rec, 4))));
                continue;
            }
        };
        let x_raw = field(&rec, 5);
        let y_raw = field(&rec, 6);
        let coord = if x_raw.is_empty() && y_raw.is_empty() {
            None
        } else {
            match (x_raw.parse::<f64>(), y_raw.parse::<f64>()) {
                // The CSV's x_coord is lateral, y_coord downfield.
                (Ok(lat), Ok(down)) => Some(FieldCoordinate::new(down, lat)),
                _ => {
                    errors.push((line, format!("bad coordinates ({x_raw:?}, {y_raw:?})")));
                    continue;
                }
            }
        };
        let season_type = if field(&rec, 7).eq_ignore_ascii_case("post") {
            SeasonType::Post
        } else {
            SeasonType::Reg
        };
        let opt = |s: String| if s.is_empty() { None } else { Some(s) };
        out.push(PassRecord {
            game_id: field(&rec, 0),
            team: field(&rec, 1),
            week: field(&rec, 2),
            name: field(&rec, 3),
            pass_type,
            coord,
            season_type,
            home_team: opt(field(&rec, 8)),
            away_team: opt(field(&rec, 9)),
            season: field(&rec, 10).parse().unwrap_or(0),
        });
    }
    Ok((out, errors))
}
