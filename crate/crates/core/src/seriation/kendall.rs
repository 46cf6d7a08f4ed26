use crate::error::{invalid, Result};

/// Fraction of discordant pairs between `pseudotimes` and `true_times`;
/// pairs tied in `pseudotimes` count one half.
pub fn kendall_tau_error(pseudotimes: &[f64], true_times: &[f64]) -> Result<f64> {
    let t = pseudotimes.len();
    if t != true_times.len() {
        return Err(invalid(format!(
            "{} pseudotimes for {} true times",
            t,
            true_times.len()
        )));
    }
    if pseudotimes.iter().chain(true_times).any(|x| !x.is_finite()) {
        return Err(crate::error::Error::NonFinite("time label"));
    }
    if t < 2 {
        return Ok(0.0);
    }
    let mut idx: Vec<usize> = (0..t).collect();
    idx.sort_by(|&a, &b| true_times[a].total_cmp(&true_times[b]));
    if idx.windows(2).any(|w| true_times[w[0]] == true_times[w[1]]) {
        return Err(invalid("true times must be distinct"));
    }
    let mut seq: Vec<f64> = idx.iter().map(|&i| pseudotimes[i]).collect();
    let mut sorted = seq.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            ties += run * (run - 1) / 2;
            run = 1;
        }
    }
    ties += run * (run - 1) / 2;
    let mut buf = vec![0.0; t];
    let inversions = count_inversions(&mut seq, &mut buf);
    let pairs = (t as u64 * (t as u64 - 1) / 2) as f64;
    Ok((inversions as f64 + 0.5 * ties as f64) / pairs)
}

/// `min(E, 1 - E)`: the error when the global direction is unknown.
pub fn kendall_tau_error_up_to_reversal(pseudotimes: &[f64], true_times: &[f64]) -> Result<f64> {
    let e = kendall_tau_error(pseudotimes, true_times)?;
    Ok(e.min(1.0 - e))
}

/// Strict inversions (`a[i] > a[j]`, `i < j`), sorting `a` as a side effect.
fn count_inversions(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (l, r) = a.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(l, bl) + count_inversions(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if a[i] <= a[j] {
            buf[k] = a[i];
            i += 1;
        } else {
            buf[k] = a[j];
            inv += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    while i < mid {
        buf[k] = a[i];
        i += 1;
        k += 1;
    }
    while j < n {
        buf[k] = a[j];
        j += 1;
        k += 1;
    }
    a.copy_from_slice(&buf[..n]);
    inv
}
