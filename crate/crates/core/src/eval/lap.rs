//! Dense linear assignment (Jonker–Volgenant shortest augmenting path).

/// Minimum-cost perfect matching on a dense `n × n` row-major cost matrix.
/// Returns `row_to_col`.
///
/// Column reduction, reduction transfer and two rounds of augmenting row
/// reduction build a good partial assignment; the remaining free rows are
/// matched by Dijkstra-style shortest augmenting paths on reduced costs.
pub fn solve_dense(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    match n {
        0 => return Vec::new(),
        1 => return vec![0],
        _ => {}
    }
    let c = |i: usize, j: usize| cost[i * n + j];
    const NONE: usize = usize::MAX;

    let mut row_sol = vec![NONE; n];
    let mut col_sol = vec![NONE; n];
    let mut v = vec![0.0f64; n];
    let mut matches = vec![0u32; n];

    // Column reduction.
    for j in (0..n).rev() {
        let (mut imin, mut min) = (0, c(0, j));
        for i in 1..n {
            if c(i, j) < min {
                min = c(i, j);
                imin = i;
            }
        }
        v[j] = min;
        matches[imin] += 1;
        if matches[imin] == 1 {
            row_sol[imin] = j;
            col_sol[j] = imin;
        } else if v[j] < v[row_sol[imin]] {
            let j1 = row_sol[imin];
            row_sol[imin] = j;
            col_sol[j] = imin;
            col_sol[j1] = NONE;
        } else {
            col_sol[j] = NONE;
        }
    }

    // Reduction transfer.
    let mut free = Vec::with_capacity(n);
    for i in 0..n {
        if matches[i] == 0 {
            free.push(i);
        } else if matches[i] == 1 {
            let j1 = row_sol[i];
            let mut min = f64::INFINITY;
            for j in 0..n {
                if j != j1 {
                    min = min.min(c(i, j) - v[j]);
                }
            }
            v[j1] -= min;
        }
    }

    // Augmenting row reduction, two passes.
    for _ in 0..2 {
        let mut queue: std::collections::VecDeque<usize> = free.drain(..).collect();
        let mut budget = 64 * n + 64;
        while let Some(i) = queue.pop_front() {
            if budget == 0 {
                free.push(i);
                free.extend(queue.drain(..));
                break;
            }
            budget -= 1;
            let (mut umin, mut j1) = (c(i, 0) - v[0], 0usize);
            let (mut usubmin, mut j2) = (f64::INFINITY, NONE);
            for j in 1..n {
                let h = c(i, j) - v[j];
                if h < usubmin {
                    if h >= umin {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            let mut i0 = col_sol[j1];
            let strict = umin < usubmin;
            if strict {
                v[j1] -= usubmin - umin;
            } else if i0 != NONE {
                j1 = j2;
                i0 = col_sol[j2];
            }
            row_sol[i] = j1;
            col_sol[j1] = i;
            if i0 != NONE {
                row_sol[i0] = NONE;
                if strict {
                    queue.push_front(i0);
                } else {
                    free.push(i0);
                }
            }
        }
    }

    // Shortest augmenting paths for the rows still free.
    let mut d = vec![0.0f64; n];
    let mut pred = vec![0usize; n];
    let mut collist: Vec<usize> = (0..n).collect();
    for &free_row in &free {
        for j in 0..n {
            d[j] = c(free_row, j) - v[j];
            pred[j] = free_row;
            collist[j] = j;
        }
        // collist[..low] scanned, [low..up] at current minimum, [up..] todo
        let (mut low, mut up) = (0usize, 0usize);
        let mut last = 0usize;
        let mut min = 0.0;
        let end_of_path;
        'search: loop {
            if up == low {
                last = low;
                min = d[collist[up]];
                up += 1;
                for k in up..n {
                    let j = collist[k];
                    let h = d[j];
                    if h <= min {
                        if h < min {
                            up = low;
                            min = h;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                }
                for &j in &collist[low..up] {
                    if col_sol[j] == NONE {
                        end_of_path = j;
                        break 'search;
                    }
                }
            }
            let j1 = collist[low];
            low += 1;
            let i = col_sol[j1];
            let h = c(i, j1) - v[j1] - min;
            let mut k = up;
            while k < n {
                let j = collist[k];
                let v2 = c(i, j) - v[j] - h;
                if v2 < d[j] {
                    pred[j] = i;
                    if v2 == min {
                        if col_sol[j] == NONE {
                            end_of_path = j;
                            break 'search;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                    d[j] = v2;
                }
                k += 1;
            }
        }
        for &j1 in &collist[..last] {
            v[j1] += d[j1] - min;
        }
        let mut j = end_of_path;
        loop {
            let i = pred[j];
            col_sol[j] = i;
            let next = row_sol[i];
            row_sol[i] = j;
            if i == free_row {
                break;
            }
            j = next;
        }
    }
    row_sol
}

/// Total cost of an assignment.
pub fn assignment_cost(cost: &[f64], n: usize, row_to_col: &[usize]) -> f64 {
    row_to_col.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum()
}
