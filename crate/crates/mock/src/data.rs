//! Canonical fixture bodies. Recorded cassettes in the repository carry the
//! same JSON, so a run recorded against the mock replays identically.

use serde_json::{json, Value};

pub fn tmdb_not_found() -> Value {
    json!({
        "status_code": 34,
        "status_message": "The resource you requested could not be found."
    })
}

pub fn spotify_not_found() -> Value {
    json!({"error": {"status": 404, "message": "Not found."}})
}

pub fn search_person(query: &str) -> Value {
    let query = query.to_ascii_lowercase();
    let results = if query.contains("sofia") && query.contains("coppola") {
        json!([{
            "adult": false,
            "gender": 1,
            "id": 1769,
            "known_for_department": "Directing",
            "name": "Sofia Coppola",
            "popularity": 18.3,
            "known_for": [
                {"id": 153, "media_type": "movie", "title": "Lost in Translation"},
                {"id": 1443, "media_type": "movie", "title": "The Virgin Suicides"}
            ]
        }])
    } else if query.contains("dicaprio") || query.contains("di caprio") {
        json!([{
            "adult": false,
            "gender": 2,
            "id": 6193,
            "known_for_department": "Acting",
            "name": "Leonardo DiCaprio",
            "popularity": 44.1,
            "known_for": [
                {"id": 27205, "media_type": "movie", "title": "Inception"},
                {"id": 597, "media_type": "movie", "title": "Titanic"}
            ]
        }])
    } else {
        json!([])
    };
    let total = results.as_array().map_or(0, Vec::len);
    json!({"page": 1, "results": results, "total_pages": 1, "total_results": total})
}

/// Exactly 14 crew entries with job "Director", plus decoy credits in other
/// jobs and a cast section.
pub fn sofia_movie_credits() -> Value {
    json!({
        "id": 1769,
        "cast": [
            {"id": 1893, "title": "Star Wars: Episode I - The Phantom Menace",
             "character": "Sache", "release_date": "1999-05-19"},
            {"id": 242, "title": "The Godfather Part III",
             "character": "Mary Corleone", "release_date": "1990-12-25"}
        ],
        "crew": [
            {"id": 153, "title": "Lost in Translation", "job": "Director",
             "department": "Directing", "release_date": "2003-09-18"},
            {"id": 153, "title": "Lost in Translation", "job": "Writer",
             "department": "Writing", "release_date": "2003-09-18"},
            {"id": 1443, "title": "The Virgin Suicides", "job": "Director",
             "department": "Directing", "release_date": "1999-05-19"},
            {"id": 1887, "title": "Marie Antoinette", "job": "Director",
             "department": "Directing", "release_date": "2006-05-24"},
            {"id": 1887, "title": "Marie Antoinette", "job": "Producer",
             "department": "Production", "release_date": "2006-05-24"},
            {"id": 39210, "title": "Somewhere", "job": "Director",
             "department": "Directing", "release_date": "2010-09-11"},
            {"id": 92657, "title": "Lick the Star", "job": "Director",
             "department": "Directing", "release_date": "1998-10-23"},
            {"id": 96936, "title": "The Bling Ring", "job": "Director",
             "department": "Directing", "release_date": "2013-06-12"},
            {"id": 364067, "title": "A Very Murray Christmas", "job": "Director",
             "department": "Directing", "release_date": "2015-12-04"},
            {"id": 384947, "title": "Bed Bath and Beyond", "job": "Director",
             "department": "Directing", "release_date": "1996-06-01"},
            {"id": 399019, "title": "The Beguiled", "job": "Director",
             "department": "Directing", "release_date": "2017-06-23"},
            {"id": 575417, "title": "On the Rocks", "job": "Director",
             "department": "Directing", "release_date": "2020-10-02"},
            {"id": 575417, "title": "On the Rocks", "job": "Producer",
             "department": "Production", "release_date": "2020-10-02"},
            {"id": 758422, "title": "The Custom of the Country", "job": "Director",
             "department": "Directing", "release_date": "2023-01-01"},
            {"id": 826970, "title": "New York City Ballet", "job": "Director",
             "department": "Directing", "release_date": "2021-05-12"},
            {"id": 835318, "title": "Un matin partout dans le monde", "job": "Director",
             "department": "Directing", "release_date": "2021-07-07"},
            {"id": 1020006, "title": "Priscilla", "job": "Director",
             "department": "Directing", "release_date": "2023-10-27"}
        ]
    })
}

/// Cast sorted anywhere but by date; the latest by release_date is Killers
/// of the Flower Moon.
pub fn dicaprio_movie_credits() -> Value {
    json!({
        "id": 6193,
        "cast": [
            {"id": 597, "title": "Titanic", "character": "Jack Dawson",
             "release_date": "1997-11-18"},
            {"id": 27205, "title": "Inception", "character": "Dom Cobb",
             "release_date": "2010-07-15"},
            {"id": 466420, "title": "Killers of the Flower Moon",
             "character": "Ernest Burkhart", "release_date": "2023-10-18"},
            {"id": 281957, "title": "The Revenant", "character": "Hugh Glass",
             "release_date": "2015-12-25"}
        ],
        "crew": [
            {"id": 281957, "title": "The Revenant", "job": "Producer",
             "department": "Production", "release_date": "2015-12-25"}
        ]
    })
}

pub fn person_movie_credits(person_id: i64) -> Option<Value> {
    match person_id {
        1769 => Some(sofia_movie_credits()),
        6193 => Some(dicaprio_movie_credits()),
        _ => None,
    }
}

/// One Director entry; the same person appears again under another job.
pub fn movie_credits(movie_id: i64) -> Option<Value> {
    match movie_id {
        466420 => Some(json!({
            "id": 466420,
            "cast": [
                {"id": 6193, "name": "Leonardo DiCaprio", "character": "Ernest Burkhart"},
                {"id": 380, "name": "Robert De Niro", "character": "William Hale"}
            ],
            "crew": [
                {"id": 1032, "name": "Martin Scorsese", "job": "Director",
                 "department": "Directing"},
                {"id": 3981, "name": "Thelma Schoonmaker", "job": "Editor",
                 "department": "Editing"},
                {"id": 1032, "name": "Martin Scorsese", "job": "Producer",
                 "department": "Production"}
            ]
        })),
        _ => None,
    }
}

pub fn search_tv(query: &str) -> Value {
    let results = if query.to_ascii_lowercase().contains("witcher") {
        json!([{
            "id": 71912,
            "name": "The Witcher",
            "first_air_date": "2019-12-20",
            "origin_country": ["US"]
        }])
    } else {
        json!([])
    };
    let total = results.as_array().map_or(0, Vec::len);
    json!({"page": 1, "results": results, "total_pages": 1, "total_results": total})
}

pub fn my_playlists() -> Value {
    json!({
        "href": "https://api.spotify.com/v1/me/playlists?offset=0&limit=1",
        "items": [{
            "id": "6GHT",
            "name": "My Pop",
            "owner": {"id": "user1", "display_name": "user1"},
            "public": true,
            "tracks": {"total": 42},
            "uri": "spotify:playlist:6GHT"
        }],
        "limit": 1,
        "offset": 0,
        "total": 3
    })
}

pub fn search_tracks(q: &str) -> Value {
    let items = if q.to_ascii_lowercase().contains("summertime sadness") {
        json!([{
            "id": "1Ist",
            "name": "Summertime Sadness",
            "artists": [{"id": "00FQ", "name": "Lana Del Rey"}],
            "album": {"id": "1GBl", "name": "Born to Die"},
            "duration_ms": 265120,
            "uri": "spotify:track:1Ist"
        }])
    } else {
        json!([])
    };
    let total = items.as_array().map_or(0, Vec::len);
    json!({"tracks": {"items": items, "limit": 1, "offset": 0, "total": total}})
}

pub fn add_tracks_snapshot() -> Value {
    json!({"snapshot_id": "NCxj"})
}

pub fn currently_playing() -> Value {
    json!({
        "is_playing": true,
        "progress_ms": 73500,
        "currently_playing_type": "track",
        "item": {
            "id": "5gAC",
            "name": "LOVE~Destiny~",
            "album": {"id": "7a00", "name": "A BEST"},
            "artists": [{"id": "0rVZ", "name": "ayumi hamasaki"}],
            "duration_ms": 273000,
            "uri": "spotify:track:5gAC"
        }
    })
}

pub fn track(track_id: &str) -> Option<Value> {
    match track_id {
        "5gAC" => Some(json!({
            "id": "5gAC",
            "name": "LOVE~Destiny~",
            "album": {"id": "7a00", "name": "A BEST"},
            "artists": [{"id": "0rVZ", "name": "ayumi hamasaki"}],
            "duration_ms": 273000,
            "popularity": 45,
            "uri": "spotify:track:5gAC"
        })),
        "1Ist" => Some(json!({
            "id": "1Ist",
            "name": "Summertime Sadness",
            "album": {"id": "1GBl", "name": "Born to Die"},
            "artists": [{"id": "00FQ", "name": "Lana Del Rey"}],
            "duration_ms": 265120,
            "popularity": 81,
            "uri": "spotify:track:1Ist"
        })),
        _ => None,
    }
}
