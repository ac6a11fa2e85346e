//! Fixed-capacity LRU cache over a dense item catalog.

const NIL: u32 = u32::MAX;

/// Result of one access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LruOutcome {
    /// Item was resident; moved to the front.
    Hit,
    /// Item entered (a type-I change); `evicted` left (a type-II change).
    Inserted { evicted: Option<u32> },
}

/// LRU list stored as an intrusive doubly linked list indexed by item.
/// Items are 0-based here.
#[derive(Debug, Clone)]
pub struct LruCache {
    capacity: usize,
    len: usize,
    head: u32,
    tail: u32,
    prev: Vec<u32>,
    next: Vec<u32>,
    resident: Vec<bool>,
}

impl LruCache {
    pub fn new(capacity: usize, n_items: usize) -> Self {
        assert!(capacity >= 1, "LRU capacity must be positive");
        assert!(n_items < NIL as usize, "catalog too large");
        Self {
            capacity,
            len: 0,
            head: NIL,
            tail: NIL,
            prev: vec![NIL; n_items],
            next: vec![NIL; n_items],
            resident: vec![false; n_items],
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, item: u32) -> bool {
        self.resident[item as usize]
    }

    /// Items from most to least recently used.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        std::iter::successors((self.head != NIL).then_some(self.head), move |&i| {
            let n = self.next[i as usize];
            (n != NIL).then_some(n)
        })
    }

    fn unlink(&mut self, item: u32) {
        let (p, n) = (self.prev[item as usize], self.next[item as usize]);
        if p == NIL {
            self.head = n;
        } else {
            self.next[p as usize] = n;
        }
        if n == NIL {
            self.tail = p;
        } else {
            self.prev[n as usize] = p;
        }
    }

    fn push_front(&mut self, item: u32) {
        self.prev[item as usize] = NIL;
        self.next[item as usize] = self.head;
        if self.head != NIL {
            self.prev[self.head as usize] = item;
        } else {
            self.tail = item;
        }
        self.head = item;
    }

    /// Moves a resident item to the front; no-op otherwise.
    pub fn touch(&mut self, item: u32) -> bool {
        if !self.contains(item) {
            return false;
        }
        if self.head != item {
            self.unlink(item);
            self.push_front(item);
        }
        true
    }
}

/// Accesses `item`: move-to-front on a hit, insert-at-front and evict the
/// tail when full on a miss.
pub fn lru_apply(cache: &mut LruCache, item: u32) -> LruOutcome {
    if cache.touch(item) {
        return LruOutcome::Hit;
    }
    let mut evicted = None;
    if cache.len == cache.capacity {
        let victim = cache.tail;
        cache.unlink(victim);
        cache.resident[victim as usize] = false;
        cache.len -= 1;
        evicted = Some(victim);
    }
    cache.push_front(item);
    cache.resident[item as usize] = true;
    cache.len += 1;
    LruOutcome::Inserted { evicted }
}
