//! Independent reference solvers for the anchor problems.

/// One leg of a shipping route.
pub struct Segment {
    pub distance_km: f64,
    pub fee_per_ton_km: f64,
    /// `(coefficient, background tons)` on congested road legs.
    pub congestion: Option<(f64, f64)>,
}

/// The route table of the 1,000-ton congestion problem, as printed in its
/// description.
pub fn congestion_routes() -> Vec<Vec<Segment>> {
    let seg = |distance_km, fee_per_ton_km, congestion| Segment {
        distance_km,
        fee_per_ton_km,
        congestion,
    };
    vec![
        vec![seg(150.0, 2.00, Some((5e-7, 2000.0))), seg(500.0, 0.80, None)],
        vec![seg(200.0, 2.10, None), seg(350.0, 1.90, Some((8e-7, 1500.0)))],
        vec![seg(100.0, 2.20, None), seg(600.0, 0.75, None)],
    ]
}

/// Cost of sending `tons` along `route`.
pub fn route_cost(route: &[Segment], tons: f64) -> f64 {
    route
        .iter()
        .map(|s| {
            let linear = s.distance_km * s.fee_per_ton_km * tons;
            let congestion = s
                .congestion
                .map_or(0.0, |(coeff, background)| coeff * (background + tons).powi(2));
            linear + congestion
        })
        .sum()
}

/// Minimum total cost over every whole-ton split of `total` tons across
/// three routes, and the split attaining it.
pub fn congestion_bruteforce(routes: &[Vec<Segment>], total: u32) -> (f64, [u32; 3]) {
    assert_eq!(routes.len(), 3);
    let mut best = (f64::INFINITY, [0; 3]);
    for a in 0..=total {
        for b in 0..=total - a {
            let c = total - a - b;
            let cost =
                route_cost(&routes[0], a.into()) + route_cost(&routes[1], b.into()) + route_cost(&routes[2], c.into());
            if cost < best.0 {
                best = (cost, [a, b, c]);
            }
        }
    }
    best
}

/// Minimum-cost transportation with integer supplies and demands, solved as
/// a min-cost flow by successive shortest paths (Bellman-Ford). Supplies
/// may exceed total demand.
pub fn transportation_min_cost(costs: &[Vec<i64>], supply: &[i64], demand: &[i64]) -> Option<i64> {
    struct Edge {
        to: usize,
        cap: i64,
        cost: i64,
    }
    let (m, n) = (supply.len(), demand.len());
    let (source, sink) = (m + n, m + n + 1);
    let nodes = m + n + 2;
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut add = |adj: &mut Vec<Vec<usize>>, from: usize, to: usize, cap: i64, cost: i64| {
        adj[from].push(edges.len());
        edges.push(Edge { to, cap, cost });
        adj[to].push(edges.len());
        edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
    };
    for (i, &s) in supply.iter().enumerate() {
        add(&mut adj, source, i, s, 0);
        for (j, &c) in costs[i].iter().enumerate() {
            add(&mut adj, i, m + j, i64::MAX / 4, c);
        }
    }
    for (j, &d) in demand.iter().enumerate() {
        add(&mut adj, m + j, sink, d, 0);
    }

    let need: i64 = demand.iter().sum();
    let (mut flow, mut total) = (0, 0);
    while flow < need {
        let mut dist = vec![i64::MAX; nodes];
        let mut via = vec![usize::MAX; nodes];
        dist[source] = 0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u] == i64::MAX {
                    continue;
                }
                for &e in &adj[u] {
                    let edge = &edges[e];
                    if edge.cap > 0 && dist[u] + edge.cost < dist[edge.to] {
                        dist[edge.to] = dist[u] + edge.cost;
                        via[edge.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink] == i64::MAX {
            return None;
        }
        let mut push = need - flow;
        let mut v = sink;
        while v != source {
            let e = via[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let e = via[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            v = edges[e ^ 1].to;
        }
        flow += push;
        total += push * dist[sink];
    }
    Some(total)
}

/// The three-industry, five-shop instance.
pub fn transport_instance() -> (Vec<Vec<i64>>, Vec<i64>, Vec<i64>) {
    (
        vec![vec![4, 9, 2, 6, 5], vec![2, 6, 1, 7, 9], vec![2, 4, 9, 8, 3]],
        vec![60, 30, 45],
        vec![15, 35, 20, 5, 40],
    )
}
