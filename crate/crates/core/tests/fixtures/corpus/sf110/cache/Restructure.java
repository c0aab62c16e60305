public class CacheTest {
  private Cache cache;

  @Before
  public void setUp() {
    cache = new Cache(2);
  }

  @Test
  public void leastRecentlyInsertedKeyIsEvicted() {
    cache.put("k0", "v0");
    cache.put("k1", "v1");
    cache.put("k2", "v2");
    assertNull("k0 should be evicted", cache.get("k0"));
  }
}
