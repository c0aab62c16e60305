public class QueueTest {
  @Test(timeout = 4000)
  public void testOfferRejectedWhenFull() throws Throwable {
    BoundedQueue queue = new BoundedQueue(1);
    queue.offer("x");
    boolean accepted = queue.offer("y");
    assertFalse(accepted);
    assertEquals(1, queue.size());
  }
}
