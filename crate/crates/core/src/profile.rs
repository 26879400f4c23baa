//! Normalized Twitter user profiles and parsing of both API versions.
//!
//! A [`UserProfile`] is the version-agnostic view of a user object. v1.1 and
//! v2 objects describing the same logical account normalize to identical
//! records for every field representable in both versions.

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entity counts extracted from the profile description.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptionEntities {
    pub urls: u32,
    pub mentions: u32,
    pub hashtags: u32,
}

/// Normalized view of a Twitter user object, independent of API version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub name: String,
    pub screen_name: String,
    pub description: String,
    pub created_at: DateTime<Utc>,
    pub followers_count: u64,
    pub following_count: u64,
    pub statuses_count: u64,
    pub listed_count: u64,
    pub protected: bool,
    pub verified: bool,
    pub has_location: bool,
    pub has_profile_url: bool,
    pub has_default_profile_image: bool,
    pub description_entities: DescriptionEntities,
    /// Profile url (0/1) plus description url entities.
    pub total_urls: u32,
}

/// Which optional booleans were missing from the raw object; aggregated into
/// load statistics so data-quality issues stay visible.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MissingFields {
    pub protected: bool,
    pub verified: bool,
}

// ---------------------------------------------------------------------------
// Raw shapes
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct RawEntityList {
    #[serde(default)]
    urls: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    user_mentions: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    mentions: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    hashtags: Option<Vec<serde_json::Value>>,
}

#[derive(Deserialize)]
struct RawEntities {
    #[serde(default)]
    url: Option<RawEntityList>,
    #[serde(default)]
    description: Option<RawEntityList>,
}

#[derive(Deserialize)]
struct RawV1User {
    #[serde(default)]
    id: Option<u64>,
    #[serde(default)]
    id_str: Option<String>,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    screen_name: Option<String>,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    created_at: Option<String>,
    #[serde(default)]
    followers_count: Option<u64>,
    #[serde(default)]
    friends_count: Option<u64>,
    #[serde(default)]
    statuses_count: Option<u64>,
    #[serde(default)]
    listed_count: Option<u64>,
    #[serde(default)]
    protected: Option<bool>,
    #[serde(default)]
    verified: Option<bool>,
    #[serde(default)]
    location: Option<String>,
    #[serde(default)]
    url: Option<String>,
    #[serde(default)]
    default_profile_image: Option<bool>,
    #[serde(default)]
    entities: Option<RawEntities>,
}

#[derive(Deserialize)]
struct RawV2PublicMetrics {
    #[serde(default)]
    followers_count: Option<u64>,
    #[serde(default)]
    following_count: Option<u64>,
    #[serde(default)]
    tweet_count: Option<u64>,
    #[serde(default)]
    listed_count: Option<u64>,
}

#[derive(Deserialize)]
struct RawV2User {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    username: Option<String>,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    created_at: Option<String>,
    #[serde(default)]
    public_metrics: Option<RawV2PublicMetrics>,
    #[serde(default)]
    protected: Option<bool>,
    #[serde(default)]
    verified: Option<bool>,
    #[serde(default)]
    location: Option<String>,
    #[serde(default)]
    url: Option<String>,
    #[serde(default)]
    profile_image_url: Option<String>,
    #[serde(default)]
    entities: Option<RawEntities>,
}

// ---------------------------------------------------------------------------
// Text scanners: fallback entity counts when the raw object carries none
// ---------------------------------------------------------------------------

/// Count of `http://` / `https://` occurrences.
pub(crate) fn count_url_mentions(text: &str) -> u32 {
    let bytes = text.as_bytes();
    let mut count = 0u32;
    let mut i = 0;
    while i + 7 <= bytes.len() {
        if bytes[i..].starts_with(b"http://") || bytes[i..].starts_with(b"https://") {
            count += 1;
            i += 7;
        } else {
            i += 1;
        }
    }
    count
}

fn count_prefixed_tokens(text: &str, marker: char) -> u32 {
    let mut count = 0u32;
    let mut prev: Option<char> = None;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == marker {
            let boundary = prev.is_none_or(|p| !p.is_alphanumeric() && p != marker);
            let starts_token = chars
                .peek()
                .is_some_and(|n| n.is_alphanumeric() || *n == '_');
            if boundary && starts_token {
                count += 1;
            }
        }
        prev = Some(c);
    }
    count
}

fn scan_description_entities(description: &str) -> DescriptionEntities {
    DescriptionEntities {
        urls: count_url_mentions(description),
        mentions: count_prefixed_tokens(description, '@'),
        hashtags: count_prefixed_tokens(description, '#'),
    }
}

fn entities_from_raw(list: &RawEntityList, v2: bool) -> DescriptionEntities {
    let len = |v: &Option<Vec<serde_json::Value>>| v.as_ref().map_or(0, |l| l.len() as u32);
    DescriptionEntities {
        urls: len(&list.urls),
        mentions: if v2 {
            len(&list.mentions)
        } else {
            len(&list.user_mentions)
        },
        hashtags: len(&list.hashtags),
    }
}

// ---------------------------------------------------------------------------
// Date parsing
// ---------------------------------------------------------------------------

/// v1.1 timestamps look like `Wed Oct 10 20:19:24 +0000 2018`.
fn parse_created_at_v1(raw: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_str(raw, "%a %b %d %H:%M:%S %z %Y")
        .map(|dt| dt.with_timezone(&Utc))
        .map_err(|e| Error::schema(format!("unparseable v1 created_at {raw:?}: {e}")))
}

/// v2 timestamps are ISO-8601 / RFC 3339 (`2020-01-01T00:00:00.000Z`).
fn parse_created_at_v2(raw: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(raw)
        .map(|dt| dt.with_timezone(&Utc))
        .map_err(|e| Error::schema(format!("unparseable v2 created_at {raw:?}: {e}")))
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

fn parse_json<'a, T: Deserialize<'a>>(json_text: &'a str) -> Result<T> {
    serde_json::from_str(json_text).map_err(|e| Error::parse(e.to_string()))
}

/// Unwrap a v2 API envelope (`{"data": {...}}`) if present.
fn unwrap_data_envelope(json_text: &str) -> Result<serde_json::Value> {
    let value: serde_json::Value =
        serde_json::from_str(json_text).map_err(|e| Error::parse(e.to_string()))?;
    match value {
        serde_json::Value::Object(mut map) if map.len() == 1 && map.contains_key("data") => {
            Ok(map.remove("data").unwrap())
        }
        other => Ok(other),
    }
}

/// Parse a Twitter API v1.1 user object into a normalized profile.
pub fn parse_user_v1(json_text: &str) -> Result<UserProfile> {
    Ok(parse_user_v1_with_stats(json_text)?.0)
}

pub fn parse_user_v1_with_stats(json_text: &str) -> Result<(UserProfile, MissingFields)> {
    let raw: RawV1User = parse_json(json_text)?;
    let user_id = raw
        .id_str
        .clone()
        .or_else(|| raw.id.map(|v| v.to_string()))
        .ok_or_else(|| Error::schema("v1 user object missing id"))?;
    let screen_name = raw
        .screen_name
        .clone()
        .ok_or_else(|| Error::schema(format!("user {user_id} missing screen_name")))?;
    let created_raw = raw
        .created_at
        .as_deref()
        .ok_or_else(|| Error::schema(format!("user {user_id} missing created_at")))?;
    let created_at = parse_created_at_v1(created_raw)?;

    let description = raw.description.clone().unwrap_or_default();
    let description_entities = match raw.entities.as_ref().and_then(|e| e.description.as_ref()) {
        Some(list) => entities_from_raw(list, false),
        None => scan_description_entities(&description),
    };
    let has_profile_url = raw.url.as_deref().is_some_and(|u| !u.is_empty());
    let missing = MissingFields {
        protected: raw.protected.is_none(),
        verified: raw.verified.is_none(),
    };

    let profile = UserProfile {
        user_id,
        name: raw.name.unwrap_or_default(),
        screen_name,
        description,
        created_at,
        followers_count: raw.followers_count.unwrap_or(0),
        following_count: raw.friends_count.unwrap_or(0),
        statuses_count: raw.statuses_count.unwrap_or(0),
        listed_count: raw.listed_count.unwrap_or(0),
        protected: raw.protected.unwrap_or(false),
        verified: raw.verified.unwrap_or(false),
        has_location: raw.location.as_deref().is_some_and(|l| !l.is_empty()),
        has_profile_url,
        has_default_profile_image: raw.default_profile_image.unwrap_or(false),
        description_entities,
        total_urls: u32::from(has_profile_url) + description_entities.urls,
    };
    Ok((profile, missing))
}

/// Parse a Twitter API v2 user object into a normalized profile.
///
/// v2 dropped the explicit default-image flag; it is derived from the
/// `profile_image_url` containing the documented `default_profile` path
/// segment.
pub fn parse_user_v2(json_text: &str) -> Result<UserProfile> {
    Ok(parse_user_v2_with_stats(json_text)?.0)
}

pub fn parse_user_v2_with_stats(json_text: &str) -> Result<(UserProfile, MissingFields)> {
    let value = unwrap_data_envelope(json_text)?;
    let raw: RawV2User =
        serde_json::from_value(value).map_err(|e| Error::parse(e.to_string()))?;
    let user_id = raw
        .id
        .clone()
        .ok_or_else(|| Error::schema("v2 user object missing id"))?;
    let screen_name = raw
        .username
        .clone()
        .ok_or_else(|| Error::schema(format!("user {user_id} missing username")))?;
    let created_raw = raw
        .created_at
        .as_deref()
        .ok_or_else(|| Error::schema(format!("user {user_id} missing created_at")))?;
    let created_at = parse_created_at_v2(created_raw)?;

    let description = raw.description.clone().unwrap_or_default();
    let description_entities = match raw.entities.as_ref().and_then(|e| e.description.as_ref()) {
        Some(list) => entities_from_raw(list, true),
        None => scan_description_entities(&description),
    };
    let metrics = raw.public_metrics.as_ref();
    let has_profile_url = raw
        .entities
        .as_ref()
        .and_then(|e| e.url.as_ref())
        .and_then(|u| u.urls.as_ref())
        .is_some_and(|l| !l.is_empty())
        || raw.url.as_deref().is_some_and(|u| !u.is_empty());
    let missing = MissingFields {
        protected: raw.protected.is_none(),
        verified: raw.verified.is_none(),
    };

    let profile = UserProfile {
        user_id,
        name: raw.name.unwrap_or_default(),
        screen_name,
        description,
        created_at,
        followers_count: metrics.and_then(|m| m.followers_count).unwrap_or(0),
        following_count: metrics.and_then(|m| m.following_count).unwrap_or(0),
        statuses_count: metrics.and_then(|m| m.tweet_count).unwrap_or(0),
        listed_count: metrics.and_then(|m| m.listed_count).unwrap_or(0),
        protected: raw.protected.unwrap_or(false),
        verified: raw.verified.unwrap_or(false),
        has_location: raw.location.as_deref().is_some_and(|l| !l.is_empty()),
        has_profile_url,
        has_default_profile_image: raw
            .profile_image_url
            .as_deref()
            .is_some_and(|u| u.contains("default_profile")),
        description_entities,
        total_urls: u32::from(has_profile_url) + description_entities.urls,
    };
    Ok((profile, missing))
}

/// API version of a raw user object, detected from its field shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApiVersion {
    V1,
    V2,
}

/// Detect the API version of one raw JSON user object by shape:
/// v1.1 carries `screen_name`, v2 carries `username`/`public_metrics`.
pub fn detect_version(json_text: &str) -> Result<ApiVersion> {
    let value = unwrap_data_envelope(json_text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::schema("user record is not a JSON object"))?;
    if obj.contains_key("screen_name") {
        Ok(ApiVersion::V1)
    } else if obj.contains_key("username") || obj.contains_key("public_metrics") {
        Ok(ApiVersion::V2)
    } else {
        Err(Error::schema(
            "cannot detect API version: neither screen_name nor username present",
        ))
    }
}

/// Parse one raw user object, auto-detecting its API version.
pub fn parse_user_auto(json_text: &str) -> Result<(UserProfile, MissingFields)> {
    match detect_version(json_text)? {
        ApiVersion::V1 => parse_user_v1_with_stats(json_text),
        ApiVersion::V2 => parse_user_v2_with_stats(json_text),
    }
}

// ---------------------------------------------------------------------------
// Emitters: serialize a normalized profile back into raw API shapes.
// Used by the synthetic corpus writer and version-equivalence fixtures.
// ---------------------------------------------------------------------------

fn v1_timestamp(dt: &DateTime<Utc>) -> String {
    dt.format("%a %b %d %H:%M:%S +0000 %Y").to_string()
}

/// Render a profile as a v1.1-shaped raw user object.
pub fn emit_v1_json(p: &UserProfile) -> String {
    let entity = |n: u32| vec![serde_json::json!({}); n as usize];
    serde_json::json!({
        "id": p.user_id.parse::<u64>().ok(),
        "id_str": p.user_id,
        "name": p.name,
        "screen_name": p.screen_name,
        "description": p.description,
        "created_at": v1_timestamp(&p.created_at),
        "followers_count": p.followers_count,
        "friends_count": p.following_count,
        "statuses_count": p.statuses_count,
        "listed_count": p.listed_count,
        "protected": p.protected,
        "verified": p.verified,
        "location": if p.has_location { "Somewhere" } else { "" },
        "url": if p.has_profile_url { serde_json::json!("https://t.co/profile") } else { serde_json::Value::Null },
        "default_profile_image": p.has_default_profile_image,
        "entities": {
            "description": {
                "urls": entity(p.description_entities.urls),
                "user_mentions": entity(p.description_entities.mentions),
                "hashtags": entity(p.description_entities.hashtags),
            }
        }
    })
    .to_string()
}

/// Render a profile as a v2-shaped raw user object.
pub fn emit_v2_json(p: &UserProfile) -> String {
    let entity = |n: u32| vec![serde_json::json!({}); n as usize];
    let mut entities = serde_json::json!({
        "description": {
            "urls": entity(p.description_entities.urls),
            "mentions": entity(p.description_entities.mentions),
            "hashtags": entity(p.description_entities.hashtags),
        }
    });
    if p.has_profile_url {
        entities["url"] = serde_json::json!({ "urls": [{"url": "https://t.co/profile"}] });
    }
    let mut obj = serde_json::json!({
        "id": p.user_id,
        "name": p.name,
        "username": p.screen_name,
        "description": p.description,
        "created_at": p.created_at.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        "public_metrics": {
            "followers_count": p.followers_count,
            "following_count": p.following_count,
            "tweet_count": p.statuses_count,
            "listed_count": p.listed_count,
        },
        "protected": p.protected,
        "verified": p.verified,
        "profile_image_url": if p.has_default_profile_image {
            "https://abs.twimg.com/sticky/default_profile_images/default_profile_normal.png"
        } else {
            "https://pbs.twimg.com/profile_images/12345/avatar_normal.jpg"
        },
        "entities": entities,
    });
    if p.has_location {
        obj["location"] = serde_json::json!("Somewhere");
    }
    obj.to_string()
}

/// Timestamp helper for tests and fixtures.
pub fn utc(y: i32, mo: u32, d: u32, h: u32, mi: u32, s: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(y, mo, d, h, mi, s).unwrap()
}
